import type { CameraInfo, TrackStatus } from "./api.js";

// One operator, one suspect: the console holds at most one active track
// and every view renders off this single store.

export interface ConsoleState {
  cameras: CameraInfo[];
  selectedCamera: string | null;
  trackId: string | null;
  updates: Map<string, TrackStatus>;
  pollMs: number;
}

export function createState(pollMs = 200): ConsoleState {
  return {
    cameras: [],
    selectedCamera: null,
    trackId: null,
    updates: new Map(),
    pollMs,
  };
}

export function activeStatus(state: ConsoleState): TrackStatus | null {
  if (state.trackId === null) return null;
  return state.updates.get(state.trackId) ?? null;
}

/** Cameras worth a "searching" badge: anywhere but the one the target left. */
export function searchCandidates(state: ConsoleState, origin: string | null): string[] {
  return state.cameras.map((c) => c.id).filter((id) => id !== origin);
}

export interface StripStep {
  state: string;
  camera: string | null;
  tick: number;
}

/** Status timeline of a track; consecutive polls of one state collapse. */
export class StatusStrip {
  steps: StripStep[] = [];
  frozen = false;

  push(status: TrackStatus): void {
    if (this.frozen || status.last_state === null) return;
    const last = this.steps[this.steps.length - 1];
    if (last && last.state === status.last_state && last.camera === status.camera) {
      return;
    }
    this.steps.push({
      state: status.last_state,
      camera: status.camera,
      tick: status.ticks,
    });
    if (status.last_state === "done") this.frozen = true;
  }

  states(): string[] {
    return this.steps.map((s) => s.state);
  }

  clear(): void {
    this.steps = [];
    this.frozen = false;
  }
}

/** True when `wanted` appears inside `seen` in order, gaps allowed. */
export function containsSequence(seen: string[], wanted: string[]): boolean {
  let at = 0;
  for (const state of seen) {
    if (state === wanted[at]) at++;
    if (at === wanted.length) return true;
  }
  return wanted.length === 0;
}
