import { describe, expect, it } from "vitest";

import {
  displayToImage,
  imageToDisplay,
  patchRect,
  rectCornerToImage,
} from "../src/coords.js";

describe("display/image mapping", () => {
  it("recovers the pixel from any position inside its display cell", () => {
    for (const zoom of [1, 2, 3, 4]) {
      for (let trial = 0; trial < 200; trial++) {
        const x = trial % 225;
        const y = (trial * 7) % 260;
        const { left, top } = imageToDisplay({ x, y }, zoom);
        const dx = trial % zoom;
        const dy = (trial + 1) % zoom;
        expect(displayToImage(left + dy, top + dx, zoom, 225, 260)).toEqual({ x, y });
      }
    }
  });

  it("clamps clicks outside the rendered image", () => {
    expect(displayToImage(-5, -5, 2, 100, 120)).toEqual({ x: 0, y: 0 });
    expect(displayToImage(10_000, 10_000, 2, 100, 120)).toEqual({ x: 99, y: 119 });
  });

  it("round-trips patch rectangle corners with zero pixel error", () => {
    for (const zoom of [1, 2, 3, 7]) {
      for (const corner of [
        { x: 0, y: 0 },
        { x: 113, y: 104 },
        { x: 193, y: 228 },
        { x: 43, y: 79 },
      ]) {
        const rect = patchRect(corner, 32, zoom);
        expect(rect.size).toBe(32 * zoom);
        expect(rectCornerToImage(rect, zoom)).toEqual(corner);
      }
    }
  });

  it("rejects non-integer zoom factors", () => {
    expect(() => imageToDisplay({ x: 0, y: 0 }, 1.5)).toThrow(RangeError);
    expect(() => displayToImage(0, 0, 0, 10, 10)).toThrow(RangeError);
    expect(() => patchRect({ x: 0, y: 0 }, 8, -1)).toThrow(RangeError);
  });

  it("rejects rectangle corners that left the pixel grid", () => {
    expect(() => rectCornerToImage({ left: 3, top: 4, size: 8 }, 2)).toThrow(RangeError);
  });
});
