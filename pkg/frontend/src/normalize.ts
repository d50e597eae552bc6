/**
 * Coordinate mapping between a canvas rectangle (CSS pixels, y down) and
 * the normalized workspace square [-1, 1]^2 (y up). The square is fitted
 * centered into the rectangle (letterboxed), so the mapping is invertible
 * to floating-point precision — well inside the 0.5 px contract.
 */

export interface CanvasRect {
  width: number;
  height: number;
}

export interface WorkspacePoint {
  x: number;
  y: number;
}

export interface ScreenPoint {
  px: number;
  py: number;
}

function scaleOf(rect: CanvasRect): number {
  return Math.min(rect.width, rect.height) / 2;
}

export function toWorkspace(rect: CanvasRect, p: ScreenPoint): WorkspacePoint {
  const s = scaleOf(rect);
  return {
    x: (p.px - rect.width / 2) / s,
    y: -(p.py - rect.height / 2) / s,
  };
}

export function toScreen(rect: CanvasRect, w: WorkspacePoint): ScreenPoint {
  const s = scaleOf(rect);
  return {
    px: rect.width / 2 + w.x * s,
    py: rect.height / 2 - w.y * s,
  };
}

/** Clamp a workspace point into the square the protocol promises. */
export function clampWorkspace(w: WorkspacePoint): WorkspacePoint {
  return {
    x: Math.max(-1, Math.min(1, w.x)),
    y: Math.max(-1, Math.min(1, w.y)),
  };
}
