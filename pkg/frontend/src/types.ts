/** Wire types mirroring the patchsim HTTP service responses. */

export type BuildStatus = "pending" | "ready" | "failed";

export type SearchMethod = "brute" | "kdtree";

export interface SessionMeta {
  image_id: string;
  status: BuildStatus;
  height: number;
  width: number;
  patch_size: number;
  grid_height: number;
  grid_width: number;
  n_patches: number;
  /** Present when status is "failed". */
  detail?: string;
}

/** One patch hit. `x` is the row and `y` the column of its top-left corner. */
export interface Neighbor {
  patch_id: number;
  x: number;
  y: number;
  distance: number;
}

export interface QueryResult {
  image_id: string;
  /** The raw click, echoed back in image coordinates. */
  clicked: { x: number; y: number };
  /** The clamped grid corner the click resolved to. */
  query: { patch_id: number; x: number; y: number };
  patch_size: number;
  method: SearchMethod;
  metric: string;
  k: number;
  neighbors: Neighbor[];
  elapsed_s: number;
}

export interface ErrorBody {
  error: string;
  detail: string;
}
