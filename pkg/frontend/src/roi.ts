import { ApiError } from "./api.js";
import type { Box, Client } from "./api.js";
import { decodePng, encodePpm, toBase64 } from "./frame.js";
import { clampRect, dragRect, rectArea, viewToFrame } from "./geometry.js";
import type { ConsoleState } from "./state.js";

export interface SelectionContext {
  cameraId: string;
  frameIndex: number;
  png: Uint8Array;
}

export interface RoiOptions {
  confirmReplace?: () => boolean;
  onCreated?: (trackId: string) => void;
}

/**
 * Drag-to-select layer over the active preview. A completed drag is mapped
 * from view pixels to frame pixels against the preview's intrinsic size and
 * posted as a new track; the service's answer (or refusal) lands in the
 * hint line under the preview. Drawing is a no-op until a preview is loaded.
 */
export class RoiLayer {
  lastBox: Box | null = null;

  private start: { x: number; y: number } | null = null;
  private rubber: HTMLElement | null = null;
  private confirmReplace: () => boolean;
  private onCreated: (trackId: string) => void;

  constructor(
    private surface: HTMLElement,
    private hint: HTMLElement,
    private client: Pick<Client, "createTrack">,
    private state: ConsoleState,
    private getContext: () => SelectionContext | null,
    opts: RoiOptions = {},
  ) {
    this.confirmReplace =
      opts.confirmReplace ?? (() => window.confirm("Replace the active track?"));
    this.onCreated = opts.onCreated ?? (() => {});
    surface.addEventListener("mousedown", (e) => this.onDown(e as MouseEvent));
    surface.addEventListener("mousemove", (e) => this.onMove(e as MouseEvent));
    surface.addEventListener("mouseup", (e) => void this.onUp(e as MouseEvent));
  }

  private viewPoint(e: MouseEvent): { x: number; y: number } {
    const rect = this.surface.getBoundingClientRect();
    return { x: e.clientX - rect.left, y: e.clientY - rect.top };
  }

  private onDown(e: MouseEvent): void {
    if (this.getContext() === null) return; // nothing to select on yet
    this.start = this.viewPoint(e);
    this.rubber = document.createElement("div");
    this.rubber.className = "rubber";
    this.surface.appendChild(this.rubber);
    this.positionRubber(this.start.x, this.start.y);
  }

  private onMove(e: MouseEvent): void {
    if (!this.start) return;
    const p = this.viewPoint(e);
    this.positionRubber(p.x, p.y);
  }

  private positionRubber(x: number, y: number): void {
    if (!this.start || !this.rubber) return;
    const r = dragRect(this.start.x, this.start.y, x, y);
    this.rubber.style.left = `${r.x}px`;
    this.rubber.style.top = `${r.y}px`;
    this.rubber.style.width = `${r.w}px`;
    this.rubber.style.height = `${r.h}px`;
  }

  private async onUp(e: MouseEvent): Promise<void> {
    if (!this.start) return;
    const begin = this.start;
    const end = this.viewPoint(e);
    this.start = null;
    this.rubber?.remove();
    this.rubber = null;

    const context = this.getContext();
    if (!context) return;
    const rect = this.surface.getBoundingClientRect();
    const view = { w: rect.width, h: rect.height };
    const raster = await decodePng(context.png);
    const frame = { w: raster.width, h: raster.height };
    const drawn = dragRect(begin.x, begin.y, end.x, end.y);
    const box = clampRect(viewToFrame(drawn, view, frame), frame);
    if (rectArea(box) === 0) {
      this.hint.textContent = "selection has no area, drag a box around the target";
      return;
    }
    if (this.state.trackId !== null && !this.confirmReplace()) {
      this.hint.textContent = "kept the active track";
      return;
    }
    try {
      const trackId = await this.client.createTrack({
        camera_id: context.cameraId,
        frame_index: context.frameIndex,
        bbox: box,
        frame_b64: toBase64(encodePpm(raster)),
      });
      this.lastBox = box;
      this.state.trackId = trackId;
      this.state.updates.delete(trackId);
      this.hint.textContent = `tracking ${trackId} on ${context.cameraId}`;
      this.onCreated(trackId);
    } catch (err) {
      if (err instanceof ApiError) {
        this.hint.textContent = `service refused the selection: ${err.code} (${err.message})`;
        return;
      }
      this.hint.textContent = "selection failed, service unreachable";
    }
  }
}
