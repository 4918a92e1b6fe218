/** Pure playback and drawing math for the twin trajectory canvases. */

export const STEPS_PER_SECOND = 25;
export const TRAIL_STEPS = 20;
export const FLOOR_ALPHA = 0.08;

export interface Extent {
  minX: number;
  maxX: number;
  minY: number;
  maxY: number;
}

/**
 * Bounding box over every trace, padded so single points and straight
 * lines still get a nonzero drawing area. Both canvases share one extent
 * so equal speeds cover equal pixels.
 */
export function traceExtent(traces: [number, number][][], pad = 0.05): Extent {
  const xs: number[] = [];
  const ys: number[] = [];
  for (const trace of traces) {
    for (const [x, y] of trace) {
      xs.push(x);
      ys.push(y);
    }
  }
  if (xs.length === 0) return { minX: -1, maxX: 1, minY: -1, maxY: 1 };
  let minX = Math.min(...xs);
  let maxX = Math.max(...xs);
  let minY = Math.min(...ys);
  let maxY = Math.max(...ys);
  const spanX = maxX - minX;
  const spanY = maxY - minY;
  const margin = Math.max(spanX, spanY, 1e-6) * pad + 1e-6;
  minX -= margin;
  maxX += margin;
  minY -= margin;
  maxY += margin;
  return { minX, maxX, minY, maxY };
}

/**
 * Advance a fractional step position and wrap at the end so the
 * animation loops; the result always stays inside [0, stepCount].
 */
export function advance(
  pos: number,
  dtMs: number,
  stepCount: number,
  stepsPerSecond = STEPS_PER_SECOND,
): number {
  if (stepCount <= 0) return 0;
  const next = pos + (dtMs / 1000) * stepsPerSecond;
  return next >= stepCount ? next % stepCount : Math.max(next, 0);
}

/**
 * Map a world position into canvas pixels, preserving aspect ratio and
 * flipping y so world-up is screen-up.
 */
export function toCanvas(
  p: [number, number],
  extent: Extent,
  width: number,
  height: number,
  margin = 10,
): [number, number] {
  const spanX = extent.maxX - extent.minX;
  const spanY = extent.maxY - extent.minY;
  const scale = Math.min((width - 2 * margin) / spanX, (height - 2 * margin) / spanY);
  const offsetX = (width - scale * spanX) / 2;
  const offsetY = (height - scale * spanY) / 2;
  const x = offsetX + (p[0] - extent.minX) * scale;
  const y = height - offsetY - (p[1] - extent.minY) * scale;
  return [x, y];
}

/**
 * Opacity of the trail point at integer step `index` when playback is at
 * fractional position `pos`: 0 ahead of the head, fading from 1 down to
 * a faint floor behind it so the full path stays readable.
 */
export function trailAlpha(index: number, pos: number, trailSteps = TRAIL_STEPS): number {
  if (index > pos) return 0;
  const age = pos - index;
  if (age >= trailSteps) return FLOOR_ALPHA;
  return Math.max(FLOOR_ALPHA, 1 - age / trailSteps);
}

const INSTRUCTIONS: Record<string, string> = {
  point_runner: "Pick the side that runs faster to the right.",
  point_goal: "Pick the side that makes more progress toward its goal.",
};

export function instruction(env: string): string {
  return INSTRUCTIONS[env] ?? "Pick the side that better performs the task.";
}
