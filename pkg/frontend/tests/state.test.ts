import { describe, expect, it } from "vitest";
import type { TrackStatus } from "../src/api.js";
import { containsSequence, createState, searchCandidates, StatusStrip } from "../src/state.js";

function status(partial: Partial<TrackStatus>): TrackStatus {
  return {
    track_id: "t-000001",
    phase: "intra",
    camera: "cam0",
    ticks: 0,
    entries: 1,
    last_state: "tracking",
    last_bbox: { x: 1, y: 2, w: 3, h: 4 },
    ...partial,
  };
}

describe("StatusStrip", () => {
  it("collapses consecutive polls of the same state on one camera", () => {
    const strip = new StatusStrip();
    strip.push(status({ last_state: "acquiring", ticks: 1 }));
    strip.push(status({ last_state: "tracking", ticks: 2 }));
    strip.push(status({ last_state: "tracking", ticks: 3 }));
    strip.push(status({ last_state: "tracking", ticks: 4 }));
    expect(strip.states()).toEqual(["acquiring", "tracking"]);
  });

  it("keeps a repeat when the camera changed", () => {
    const strip = new StatusStrip();
    strip.push(status({ last_state: "tracking", camera: "cam0" }));
    strip.push(status({ last_state: "tracking", camera: "cam1" }));
    expect(strip.steps.map((s) => s.camera)).toEqual(["cam0", "cam1"]);
  });

  it("ignores polls made before the first tick", () => {
    const strip = new StatusStrip();
    strip.push(status({ last_state: null, last_bbox: null }));
    expect(strip.steps).toEqual([]);
  });

  it("freezes once the track reports done", () => {
    const strip = new StatusStrip();
    strip.push(status({ last_state: "tracking" }));
    strip.push(status({ last_state: "done", camera: null }));
    strip.push(status({ last_state: "tracking" }));
    expect(strip.frozen).toBe(true);
    expect(strip.states()).toEqual(["tracking", "done"]);
  });
});

describe("containsSequence", () => {
  it("finds in-order subsequences with gaps", () => {
    const seen = ["acquiring", "tracking", "occluded", "tracking", "searching", "acquiring", "tracking"];
    expect(containsSequence(seen, ["acquiring", "tracking", "searching", "tracking"])).toBe(true);
    expect(containsSequence(seen, ["searching", "occluded"])).toBe(false);
    expect(containsSequence(seen, [])).toBe(true);
  });
});

describe("searchCandidates", () => {
  it("badges every camera but the one the target left", () => {
    const state = createState();
    state.cameras = [
      { id: "cam0", fov: [0, 0, 30, 30], resolution: [240, 120], frames_received: 5, dropped: 0, last_frame_index: 4 },
      { id: "cam1", fov: [30, 0, 30, 30], resolution: [240, 120], frames_received: 5, dropped: 0, last_frame_index: 4 },
    ];
    expect(searchCandidates(state, "cam0")).toEqual(["cam1"]);
    expect(searchCandidates(state, null)).toEqual(["cam0", "cam1"]);
  });
});
