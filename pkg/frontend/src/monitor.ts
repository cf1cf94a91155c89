import { ApiError } from "./api.js";
import type { Client, TrackStatus } from "./api.js";
import { frameToView } from "./geometry.js";
import type { Size } from "./geometry.js";
import { searchCandidates, StatusStrip } from "./state.js";
import type { ConsoleState } from "./state.js";

export interface SurfaceInfo {
  el: HTMLElement;
  view: Size;
  frame: Size;
}

export interface MonitorHooks {
  /** Resolve the drawing surface that shows a camera, if it is on screen. */
  surface: (cameraId: string) => SurfaceInfo | null;
  tracked: (cameraId: string | null) => void;
  searching: (cameraIds: string[]) => void;
}

export interface MonitorEls {
  overlay: HTMLElement;
  strip: HTMLElement;
  mapPanel: HTMLElement;
  notice: HTMLElement;
}

/**
 * Follows one track: polls its status, draws the current box over the
 * owning camera's preview, grows the status timeline, and keeps the
 * trajectory map panel current. Monitoring is read-only; the only write
 * path to the service stays in the ROI layer.
 */
export class TrackMonitor {
  strip = new StatusStrip();
  trackId: string | null = null;

  private timer: ReturnType<typeof setTimeout> | null = null;
  private busy = false;
  private mapEntries = -1;

  constructor(
    private els: MonitorEls,
    private client: Pick<Client, "trackStatus" | "trackMap">,
    private state: ConsoleState,
    private hooks: MonitorHooks,
  ) {
    els.overlay.hidden = true;
    els.notice.textContent = "";
  }

  start(trackId: string): void {
    this.stop();
    this.trackId = trackId;
    this.strip.clear();
    this.mapEntries = -1;
    this.els.notice.textContent = "";
    this.schedule(0);
  }

  stop(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
    this.trackId = null;
  }

  private schedule(delay: number): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => void this.pollOnce(), delay);
  }

  async pollOnce(): Promise<TrackStatus | null> {
    const trackId = this.trackId;
    if (trackId === null || this.busy) return null;
    this.busy = true;
    try {
      const status = await this.client.trackStatus(trackId);
      this.apply(status);
      if (status.entries !== this.mapEntries) {
        this.els.mapPanel.innerHTML = await this.client.trackMap(trackId);
        this.mapEntries = status.entries;
      }
      if (status.last_state === "done") {
        this.stop(); // timeline frozen, map stays up
      } else if (this.trackId === trackId) {
        this.schedule(this.state.pollMs);
      }
      return status;
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.els.notice.textContent = `track ${trackId} is closed`;
        this.els.overlay.hidden = true;
        this.hooks.tracked(null);
        this.hooks.searching([]);
        if (this.state.trackId === trackId) this.state.trackId = null;
        this.stop();
        return null;
      }
      // transient failure: keep polling, the grid's banner covers outages
      if (this.trackId === trackId) this.schedule(this.state.pollMs);
      return null;
    } finally {
      this.busy = false;
    }
  }

  private apply(status: TrackStatus): void {
    this.state.updates.set(status.track_id, status);
    this.strip.push(status);
    this.renderStrip();

    this.hooks.tracked(status.phase === "intra" ? status.camera : null);
    this.hooks.searching(
      status.last_state === "searching"
        ? searchCandidates(this.state, status.camera)
        : [],
    );

    const surface =
      status.camera !== null ? this.hooks.surface(status.camera) : null;
    if (status.last_bbox && surface && surface.view.w > 0) {
      const box = frameToView(status.last_bbox, surface.view, surface.frame);
      this.els.overlay.hidden = false;
      this.els.overlay.style.left = `${box.x}px`;
      this.els.overlay.style.top = `${box.y}px`;
      this.els.overlay.style.width = `${box.w}px`;
      this.els.overlay.style.height = `${box.h}px`;
      if (this.els.overlay.parentElement !== surface.el) {
        surface.el.appendChild(this.els.overlay);
      }
    } else {
      this.els.overlay.hidden = true;
    }
  }

  private renderStrip(): void {
    this.els.strip.innerHTML = this.strip.steps
      .map(
        (s) =>
          `<span class="step state-${s.state}" title="tick ${s.tick}">` +
          `${s.state}${s.camera ? "@" + s.camera : ""}</span>`,
      )
      .join("");
  }
}
