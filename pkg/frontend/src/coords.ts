/**
 * Display <-> image coordinate mapping.
 *
 * The image renders at an integer zoom factor, so every mapping below is
 * exact integer arithmetic: a rectangle corner divided by the zoom gives
 * back the service coordinates with zero pixel error. Image coordinates
 * follow the service convention: x is the row (vertical), y the column
 * (horizontal). Canvas positions use left/top in CSS pixel order.
 */

export interface ImagePoint {
  x: number;
  y: number;
}

export interface DisplayRect {
  left: number;
  top: number;
  size: number;
}

function checkZoom(zoom: number): void {
  if (!Number.isInteger(zoom) || zoom < 1) {
    throw new RangeError(`zoom must be a positive integer, got ${zoom}`);
  }
}

/** Map a canvas click (offsetX/offsetY) to the image pixel underneath it. */
export function displayToImage(
  offsetX: number,
  offsetY: number,
  zoom: number,
  height: number,
  width: number,
): ImagePoint {
  checkZoom(zoom);
  const clamp = (v: number, hi: number) => Math.min(Math.max(v, 0), hi - 1);
  return {
    x: clamp(Math.floor(offsetY / zoom), height),
    y: clamp(Math.floor(offsetX / zoom), width),
  };
}

/** Top-left canvas position of an image pixel. */
export function imageToDisplay(point: ImagePoint, zoom: number): { left: number; top: number } {
  checkZoom(zoom);
  return { left: point.y * zoom, top: point.x * zoom };
}

/** Canvas rectangle covering the patch whose corner sits at (x, y). */
export function patchRect(corner: ImagePoint, patchSize: number, zoom: number): DisplayRect {
  checkZoom(zoom);
  const { left, top } = imageToDisplay(corner, zoom);
  return { left, top, size: patchSize * zoom };
}

/** Invert patchRect exactly; the round trip loses nothing at any zoom. */
export function rectCornerToImage(rect: DisplayRect, zoom: number): ImagePoint {
  checkZoom(zoom);
  if (rect.left % zoom !== 0 || rect.top % zoom !== 0) {
    throw new RangeError("rectangle corner does not sit on the pixel grid");
  }
  return { x: rect.top / zoom, y: rect.left / zoom };
}
