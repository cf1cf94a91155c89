export interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface Size {
  w: number;
  h: number;
}

/** Rectangle spanned by a drag, whichever corner the drag started from. */
export function dragRect(x0: number, y0: number, x1: number, y1: number): Rect {
  return {
    x: Math.min(x0, x1),
    y: Math.min(y0, y1),
    w: Math.abs(x1 - x0),
    h: Math.abs(y1 - y0),
  };
}

/** Map a rectangle from view pixels to frame pixels of the intrinsic size. */
export function viewToFrame(r: Rect, view: Size, frame: Size): Rect {
  const sx = frame.w / view.w;
  const sy = frame.h / view.h;
  return { x: r.x * sx, y: r.y * sy, w: r.w * sx, h: r.h * sy };
}

export function frameToView(r: Rect, view: Size, frame: Size): Rect {
  const sx = view.w / frame.w;
  const sy = view.h / frame.h;
  return { x: r.x * sx, y: r.y * sy, w: r.w * sx, h: r.h * sy };
}

/** Intersect with the frame so off-canvas drags cannot select empty space. */
export function clampRect(r: Rect, bounds: Size): Rect {
  const x0 = Math.max(0, Math.min(r.x, bounds.w));
  const y0 = Math.max(0, Math.min(r.y, bounds.h));
  const x1 = Math.max(0, Math.min(r.x + r.w, bounds.w));
  const y1 = Math.max(0, Math.min(r.y + r.h, bounds.h));
  return { x: x0, y: y0, w: x1 - x0, h: y1 - y0 };
}

export function rectArea(r: Rect): number {
  return r.w * r.h;
}
