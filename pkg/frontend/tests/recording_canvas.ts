import { CanvasLike } from "../src/overlay.js";

export interface Op {
  kind: "clear" | "stroke";
  x: number;
  y: number;
  w: number;
  h: number;
  color: string;
}

/** CanvasLike that records every drawing operation for assertions. */
export class RecordingCanvas implements CanvasLike {
  strokeStyle: string | CanvasGradient | CanvasPattern = "";
  lineWidth = 0;
  ops: Op[] = [];

  clearRect(x: number, y: number, w: number, h: number): void {
    this.ops.push({ kind: "clear", x, y, w, h, color: "" });
  }

  strokeRect(x: number, y: number, w: number, h: number): void {
    this.ops.push({ kind: "stroke", x, y, w, h, color: String(this.strokeStyle) });
  }

  strokes(): Op[] {
    return this.ops.filter((op) => op.kind === "stroke");
  }
}
