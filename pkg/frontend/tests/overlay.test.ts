import { describe, expect, it } from "vitest";

import {
  MARKER_COLOR,
  NEIGHBOR_COLOR,
  QUERY_COLOR,
  drawOverlay,
} from "../src/overlay.js";
import { QueryResult } from "../src/types.js";
import { CANONICAL_NEIGHBORS } from "./fake_service.js";
import { RecordingCanvas } from "./recording_canvas.js";

function canonicalResult(): QueryResult {
  return {
    image_id: "img-1",
    clicked: { x: 113, y: 104 },
    query: { patch_id: 25981, x: 113, y: 104 },
    patch_size: 32,
    method: "kdtree",
    metric: "euclidean",
    k: 5,
    neighbors: CANONICAL_NEIGHBORS,
    elapsed_s: 0.0001,
  };
}

describe("overlay painting", () => {
  it("clears the whole canvas before drawing", () => {
    const ctx = new RecordingCanvas();
    drawOverlay(ctx, { width: 520, height: 450, zoom: 2, result: null, click: null });
    expect(ctx.ops).toEqual([{ kind: "clear", x: 0, y: 0, w: 520, h: 450, color: "" }]);
  });

  it("draws one rectangle per neighbor with the query patch distinct", () => {
    const ctx = new RecordingCanvas();
    const drawn = drawOverlay(ctx, {
      width: 260,
      height: 225,
      zoom: 1,
      result: canonicalResult(),
      click: { x: 113, y: 104 },
    });
    expect(drawn).toHaveLength(5);
    const strokes = ctx.ops.filter((op) => op.kind === "stroke");
    expect(strokes).toHaveLength(6); // 5 patches + click marker
    expect(drawn[0]!.color).toBe(QUERY_COLOR);
    for (const rect of drawn.slice(1)) expect(rect.color).toBe(NEIGHBOR_COLOR);
    expect(strokes.at(-1)!.color).toBe(MARKER_COLOR);
  });

  it("places rectangles so corners invert exactly at any zoom", () => {
    for (const zoom of [1, 2, 3]) {
      const ctx = new RecordingCanvas();
      const drawn = drawOverlay(ctx, {
        width: 260 * zoom,
        height: 225 * zoom,
        zoom,
        result: canonicalResult(),
        click: null,
      });
      drawn.forEach((rect, i) => {
        const n = CANONICAL_NEIGHBORS[i]!;
        expect(rect.top / zoom).toBe(n.x);
        expect(rect.left / zoom).toBe(n.y);
        expect(rect.size).toBe(32 * zoom);
      });
    }
  });

  it("draws only the click marker when no result is available", () => {
    const ctx = new RecordingCanvas();
    const drawn = drawOverlay(ctx, {
      width: 100,
      height: 100,
      zoom: 1,
      result: null,
      click: { x: 10, y: 20 },
    });
    expect(drawn).toHaveLength(0);
    const strokes = ctx.ops.filter((op) => op.kind === "stroke");
    expect(strokes).toHaveLength(1);
    expect(strokes[0]!.color).toBe(MARKER_COLOR);
  });
});
