import { patchRect } from "./coords.js";
import { QueryResult } from "./types.js";

/**
 * Rectangle overlay painting. Only the 2D-context members used here are
 * required, so tests can pass a recording stand-in instead of a canvas.
 */

export interface CanvasLike {
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
}

export const QUERY_COLOR = "#2ecc40";
export const NEIGHBOR_COLOR = "#ff4136";
export const MARKER_COLOR = "#ffdc00";

export interface DrawnRect {
  patchId: number;
  left: number;
  top: number;
  size: number;
  color: string;
}

export interface OverlayInput {
  /** Canvas dimensions in display pixels. */
  width: number;
  height: number;
  zoom: number;
  result: QueryResult | null;
  click: { x: number; y: number } | null;
}

/**
 * Clear the canvas and draw the current result: one rectangle per
 * neighbor, the query patch in a distinct color, and a marker on the
 * clicked pixel. Returns the patch rectangles drawn, in neighbor order.
 */
export function drawOverlay(ctx: CanvasLike, input: OverlayInput): DrawnRect[] {
  ctx.clearRect(0, 0, input.width, input.height);
  const drawn: DrawnRect[] = [];
  const result = input.result;
  if (result) {
    ctx.lineWidth = 2;
    for (const n of result.neighbors) {
      const rect = patchRect({ x: n.x, y: n.y }, result.patch_size, input.zoom);
      const color = n.patch_id === result.query.patch_id ? QUERY_COLOR : NEIGHBOR_COLOR;
      ctx.strokeStyle = color;
      ctx.strokeRect(rect.left, rect.top, rect.size, rect.size);
      drawn.push({ patchId: n.patch_id, ...rect, color });
    }
  }
  if (input.click) {
    ctx.lineWidth = 1;
    ctx.strokeStyle = MARKER_COLOR;
    const size = Math.max(input.zoom, 3);
    ctx.strokeRect(
      input.click.y * input.zoom - size / 2,
      input.click.x * input.zoom - size / 2,
      size,
      size,
    );
  }
  return drawn;
}
