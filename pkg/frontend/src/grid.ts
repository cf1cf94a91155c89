import { ApiError, ServiceDownError } from "./api.js";
import type { CameraInfo, Client } from "./api.js";
import { pngDataUrl } from "./frame.js";
import type { ConsoleState } from "./state.js";

export type GridClient = Pick<Client, "listCameras" | "preview">;

export interface CachedPreview {
  bytes: Uint8Array;
  frameIndex: number | null;
  fetchedAt: number;
}

const BACKOFF_CAP_MS = 5000;

/**
 * Live camera wall. One poll cycle refreshes the camera list and then every
 * tile's preview, keeping at most one request in flight per endpoint. A tile
 * that has never produced a frame shows "no signal"; a tile whose refresh
 * failed keeps its last image and is marked stale. When the service itself
 * is unreachable a banner appears and polling backs off until it answers.
 */
export class CameraGrid {
  onSelect: (cameraId: string) => void = () => {};
  previews = new Map<string, CachedPreview>();

  private timer: ReturnType<typeof setTimeout> | null = null;
  private running = false;
  private busy = new Set<string>();
  private delayMs: number;
  private tileIds: string[] = [];

  constructor(
    private root: HTMLElement,
    private banner: HTMLElement,
    private client: GridClient,
    private state: ConsoleState,
  ) {
    this.delayMs = state.pollMs;
    this.banner.hidden = true;
  }

  start(): void {
    if (this.running) return;
    this.running = true;
    this.timer = setTimeout(() => void this.tick(), 0);
  }

  stop(): void {
    this.running = false;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
  }

  tile(cameraId: string): HTMLElement | null {
    return this.root.querySelector(`[data-camera="${cameraId}"]`);
  }

  setTracked(cameraId: string | null): void {
    for (const el of this.root.querySelectorAll(".tile")) {
      el.classList.toggle("tracked", (el as HTMLElement).dataset.camera === cameraId);
    }
  }

  setSearching(cameraIds: string[]): void {
    for (const el of this.root.querySelectorAll<HTMLElement>(".tile")) {
      const badge = el.querySelector<HTMLElement>(".badge");
      if (!badge) continue;
      badge.hidden = !cameraIds.includes(el.dataset.camera ?? "");
    }
  }

  private async tick(): Promise<void> {
    try {
      const cameras = await this.client.listCameras();
      this.state.cameras = cameras;
      this.banner.hidden = true;
      this.delayMs = this.state.pollMs;
      this.renderTiles(cameras);
      for (const cam of cameras) {
        if (!this.busy.has(cam.id)) void this.refreshPreview(cam);
      }
    } catch (err) {
      if (err instanceof ServiceDownError) {
        this.banner.hidden = false;
        this.banner.textContent = "service unreachable, retrying";
        this.delayMs = Math.min(this.delayMs * 2, BACKOFF_CAP_MS);
      } else {
        throw err;
      }
    } finally {
      if (this.running) {
        this.timer = setTimeout(() => void this.tick(), this.delayMs);
      }
    }
  }

  private renderTiles(cameras: CameraInfo[]): void {
    const ids = cameras.map((c) => c.id);
    if (ids.join(",") === this.tileIds.join(",")) return;
    this.tileIds = ids;
    this.root.innerHTML = cameras
      .map(
        (cam) => `
      <div class="tile" data-camera="${cam.id}">
        <div class="tile-head">
          <span class="cam-name">${cam.id}</span>
          <span class="badge" hidden>searching</span>
          <span class="note"></span>
        </div>
        <div class="tile-body">
          <img class="preview" alt="${cam.id} preview" hidden>
          <div class="placeholder">no signal</div>
        </div>
      </div>`,
      )
      .join("");
    for (const el of this.root.querySelectorAll<HTMLElement>(".tile")) {
      el.addEventListener("click", () => {
        const id = el.dataset.camera;
        if (!id) return;
        this.state.selectedCamera = id;
        for (const other of this.root.querySelectorAll(".tile")) {
          other.classList.toggle("selected", other === el);
        }
        this.onSelect(id);
      });
    }
  }

  private async refreshPreview(cam: CameraInfo): Promise<void> {
    this.busy.add(cam.id);
    try {
      const bytes = await this.client.preview(cam.id);
      this.previews.set(cam.id, {
        bytes,
        frameIndex: cam.last_frame_index,
        fetchedAt: Date.now(),
      });
      const tile = this.tile(cam.id);
      if (tile) {
        const img = tile.querySelector<HTMLImageElement>(".preview");
        const placeholder = tile.querySelector<HTMLElement>(".placeholder");
        if (img) {
          img.src = pngDataUrl(bytes);
          img.hidden = false;
        }
        if (placeholder) placeholder.hidden = true;
        tile.classList.remove("stale");
        const note = tile.querySelector<HTMLElement>(".note");
        if (note) note.textContent = "";
      }
    } catch (err) {
      const tile = this.tile(cam.id);
      if (err instanceof ApiError && err.status === 404) {
        // camera exists but has not sent a frame; placeholder stays up
        return;
      }
      if (tile && this.previews.has(cam.id)) {
        tile.classList.add("stale");
        const note = tile.querySelector<HTMLElement>(".note");
        if (note) note.textContent = "stale";
      }
    } finally {
      this.busy.delete(cam.id);
    }
  }
}
