import { describe, expect, it } from "vitest";
import { clampRect, dragRect, frameToView, rectArea, viewToFrame } from "../src/geometry.js";
import { mulberry32 } from "./helpers.js";

describe("dragRect", () => {
  it("normalizes any drag direction to a positive-extent rect", () => {
    expect(dragRect(10, 20, 40, 60)).toEqual({ x: 10, y: 20, w: 30, h: 40 });
    expect(dragRect(40, 60, 10, 20)).toEqual({ x: 10, y: 20, w: 30, h: 40 });
    expect(dragRect(40, 20, 10, 60)).toEqual({ x: 10, y: 20, w: 30, h: 40 });
  });

  it("collapses a click to a zero-area rect", () => {
    const r = dragRect(5, 5, 5, 5);
    expect(rectArea(r)).toBe(0);
  });
});

describe("clampRect", () => {
  it("trims overhang on every side", () => {
    const bounds = { w: 100, h: 50 };
    expect(clampRect({ x: -10, y: -5, w: 30, h: 20 }, bounds)).toEqual({ x: 0, y: 0, w: 20, h: 15 });
    expect(clampRect({ x: 90, y: 40, w: 30, h: 30 }, bounds)).toEqual({ x: 90, y: 40, w: 10, h: 10 });
  });

  it("zeroes extents for a rect fully outside", () => {
    const r = clampRect({ x: 200, y: 10, w: 5, h: 5 }, { w: 100, h: 50 });
    expect(rectArea(r)).toBe(0);
  });
});

describe("view/frame mapping", () => {
  it("scales by the intrinsic-to-displayed ratio per axis", () => {
    const view = { w: 480, h: 240 };
    const frame = { w: 240, h: 120 };
    expect(viewToFrame({ x: 72, y: 92, w: 48, h: 56 }, view, frame)).toEqual({ x: 36, y: 46, w: 24, h: 28 });
    expect(frameToView({ x: 36, y: 46, w: 24, h: 28 }, view, frame)).toEqual({ x: 72, y: 92, w: 48, h: 56 });
  });

  it("round-trips under a view pixel for arbitrary sizes", () => {
    const rand = mulberry32(0xa11ce);
    for (let trial = 0; trial < 500; trial++) {
      const view = { w: 80 + rand() * 1800, h: 60 + rand() * 1000 };
      const frame = {
        w: 16 + Math.floor(rand() * 640),
        h: 16 + Math.floor(rand() * 480),
      };
      const drawn = dragRect(
        rand() * view.w, rand() * view.h,
        rand() * view.w, rand() * view.h,
      );
      const back = frameToView(viewToFrame(drawn, view, frame), view, frame);
      expect(Math.abs(back.x - drawn.x)).toBeLessThan(1);
      expect(Math.abs(back.y - drawn.y)).toBeLessThan(1);
      expect(Math.abs(back.w - drawn.w)).toBeLessThan(1);
      expect(Math.abs(back.h - drawn.h)).toBeLessThan(1);
    }
  });
});
