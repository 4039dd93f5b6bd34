/** Client-side quadrangle validation mirroring the server's canonical form.
 *
 * Image coordinates are y-down, so a positive shoelace sum corresponds to
 * clockwise on screen; the canonical order starts at the lexicographically
 * smallest vertex (x first, then y) and proceeds clockwise. Committing only
 * canonicalized quads means a saved lot refetches with identical coordinates.
 */

import type { Vec2 } from "./types.js";

export const AREA_EPSILON = 1e-9;

/** Shoelace sum; positive when the ring is clockwise on screen (y-down). */
export function signedArea(points: Vec2[]): number {
  let acc = 0;
  for (let i = 0; i < points.length; i++) {
    const [x1, y1] = points[i];
    const [x2, y2] = points[(i + 1) % points.length];
    acc += x1 * y2 - x2 * y1;
  }
  return acc / 2;
}

export function polygonArea(points: Vec2[]): number {
  return Math.abs(signedArea(points));
}

function lexicographicMinIndex(points: Vec2[]): number {
  let best = 0;
  for (let i = 1; i < points.length; i++) {
    const [x, y] = points[i];
    const [bx, by] = points[best];
    if (x < bx || (x === bx && y < by)) best = i;
  }
  return best;
}

/**
 * Validate four clicked points as a strictly convex quad and return them in
 * canonical order, or null when the points are degenerate (repeated /
 * collinear / self-intersecting / below the minimum area).
 */
export function canonicalQuad(points: Vec2[], minArea = AREA_EPSILON): Vec2[] | null {
  if (points.length !== 4) return null;
  if (!points.every(([x, y]) => Number.isFinite(x) && Number.isFinite(y))) return null;

  // order around the centroid, as the server does for unordered input
  const cx = (points[0][0] + points[1][0] + points[2][0] + points[3][0]) / 4;
  const cy = (points[0][1] + points[1][1] + points[2][1] + points[3][1]) / 4;
  const ordered = [...points].sort(
    (a, b) => Math.atan2(a[1] - cy, a[0] - cx) - Math.atan2(b[1] - cy, b[0] - cx),
  );

  if (Math.abs(signedArea(ordered)) <= Math.max(minArea, AREA_EPSILON)) return null;

  // strict convexity: every corner must turn the same way, never straight
  const reference = Math.sign(signedArea(ordered));
  for (let i = 0; i < 4; i++) {
    const [x0, y0] = ordered[i];
    const [x1, y1] = ordered[(i + 1) % 4];
    const [x2, y2] = ordered[(i + 2) % 4];
    const cross = (x1 - x0) * (y2 - y1) - (y1 - y0) * (x2 - x1);
    if (Math.sign(cross) !== reference) return null;
  }

  const clockwise = reference > 0 ? ordered : ordered.slice().reverse();
  const start = lexicographicMinIndex(clockwise);
  return clockwise.slice(start).concat(clockwise.slice(0, start));
}

/** Point-in-convex-quad test for canvas hit testing (canonical order). */
export function pointInQuad(x: number, y: number, quad: Vec2[]): boolean {
  for (let i = 0; i < quad.length; i++) {
    const [x1, y1] = quad[i];
    const [x2, y2] = quad[(i + 1) % quad.length];
    if ((x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) < 0) return false;
  }
  return true;
}

/** Smallest axis-aligned box containing the quad, as [[minx,miny],[maxx,maxy]]. */
export function circumscribe(quad: Vec2[]): [Vec2, Vec2] {
  const xs = quad.map((p) => p[0]);
  const ys = quad.map((p) => p[1]);
  return [
    [Math.min(...xs), Math.min(...ys)],
    [Math.max(...xs), Math.max(...ys)],
  ];
}

/** True when every vertex lies inside width x height (with slack in px). */
export function withinBounds(
  quad: Vec2[], width: number, height: number, tolerance = 0.5,
): boolean {
  return quad.every(
    ([x, y]) =>
      x >= -tolerance && y >= -tolerance && x <= width + tolerance && y <= height + tolerance,
  );
}
