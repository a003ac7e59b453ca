import { QueryResult, SearchMethod, SessionMeta } from "./types.js";

/**
 * UI state container and pure reducer.
 *
 * Clicks are numbered; every in-flight query carries the click number it
 * answers and results for superseded clicks are dropped on arrival
 * (last-click-wins). The overlay therefore only ever derives from the most
 * recent answered click.
 */

export interface MethodSlot {
  status: "idle" | "loading" | "ok" | "error";
  seq: number;
  result: QueryResult | null;
  error: string | null;
}

export interface UiState {
  session: SessionMeta | null;
  uploading: boolean;
  k: number;
  method: SearchMethod;
  compare: boolean;
  click: { x: number; y: number } | null;
  clickSeq: number;
  slots: Record<SearchMethod, MethodSlot>;
  banner: string | null;
  clampNote: boolean;
}

const idleSlot = (): MethodSlot => ({ status: "idle", seq: 0, result: null, error: null });

export const initialState: UiState = {
  session: null,
  uploading: false,
  k: 5,
  method: "kdtree",
  compare: false,
  click: null,
  clickSeq: 0,
  slots: { brute: idleSlot(), kdtree: idleSlot() },
  banner: null,
  clampNote: false,
};

export type Action =
  | { type: "upload-start" }
  | { type: "upload-ready"; meta: SessionMeta }
  | { type: "upload-failed"; message: string }
  | { type: "set-k"; k: number }
  | { type: "set-method"; method: SearchMethod }
  | { type: "set-compare"; on: boolean }
  | { type: "click"; x: number; y: number }
  | { type: "query-start"; method: SearchMethod; seq: number }
  | { type: "query-ok"; method: SearchMethod; seq: number; result: QueryResult }
  | { type: "query-error"; method: SearchMethod; seq: number; message: string }
  | { type: "clear-banner" };

function freshSlots(): Record<SearchMethod, MethodSlot> {
  return { brute: idleSlot(), kdtree: idleSlot() };
}

export function reduce(state: UiState, action: Action): UiState {
  switch (action.type) {
    case "upload-start":
      return { ...initialState, k: state.k, method: state.method, compare: state.compare, uploading: true };
    case "upload-ready":
      return { ...state, uploading: false, session: action.meta, banner: null };
    case "upload-failed":
      return { ...state, uploading: false, session: null, banner: action.message };
    case "set-k":
      if (!Number.isInteger(action.k) || action.k < 1) return state;
      return { ...state, k: action.k };
    case "set-method":
      return { ...state, method: action.method };
    case "set-compare":
      return { ...state, compare: action.on };
    case "click":
      return {
        ...state,
        click: { x: action.x, y: action.y },
        clickSeq: state.clickSeq + 1,
        slots: freshSlots(),
        clampNote: false,
        banner: null,
      };
    case "query-start": {
      if (action.seq !== state.clickSeq) return state;
      const slot: MethodSlot = { status: "loading", seq: action.seq, result: null, error: null };
      return { ...state, slots: { ...state.slots, [action.method]: slot } };
    }
    case "query-ok": {
      if (action.seq !== state.clickSeq) return state; // stale response
      const slot: MethodSlot = { status: "ok", seq: action.seq, result: action.result, error: null };
      const q = action.result.query;
      const c = action.result.clicked;
      const clamped = q.x !== c.x || q.y !== c.y;
      return {
        ...state,
        slots: { ...state.slots, [action.method]: slot },
        clampNote: state.clampNote || clamped,
      };
    }
    case "query-error": {
      if (action.seq !== state.clickSeq) return state;
      const slot: MethodSlot = { status: "error", seq: action.seq, result: null, error: action.message };
      return { ...state, slots: { ...state.slots, [action.method]: slot } };
    }
    case "clear-banner":
      return { ...state, banner: null };
  }
}

/** The result the overlay should draw: the active method's, if answered. */
export function activeResult(state: UiState): QueryResult | null {
  return state.slots[state.method].result;
}

export interface CompareRow {
  method: SearchMethod;
  ids: number[];
  elapsedS: number;
}

export interface ComparePanel {
  rows: CompareRow[];
  /** brute elapsed divided by kdtree elapsed; positive when both answered. */
  speedup: number | null;
  idsMatch: boolean | null;
  errors: Partial<Record<SearchMethod, string>>;
}

/** Side-by-side data once at least one method has answered the last click. */
export function comparePanel(state: UiState): ComparePanel | null {
  const rows: CompareRow[] = [];
  const errors: ComparePanel["errors"] = {};
  for (const method of ["brute", "kdtree"] as const) {
    const slot = state.slots[method];
    if (slot.status === "ok" && slot.result) {
      rows.push({
        method,
        ids: slot.result.neighbors.map((n) => n.patch_id),
        elapsedS: slot.result.elapsed_s,
      });
    } else if (slot.status === "error" && slot.error) {
      errors[method] = slot.error;
    }
  }
  if (rows.length === 0 && Object.keys(errors).length === 0) return null;
  const brute = rows.find((r) => r.method === "brute");
  const kd = rows.find((r) => r.method === "kdtree");
  let speedup: number | null = null;
  let idsMatch: boolean | null = null;
  if (brute && kd) {
    speedup = kd.elapsedS > 0 ? brute.elapsedS / kd.elapsedS : null;
    idsMatch =
      brute.ids.length === kd.ids.length && brute.ids.every((id, i) => id === kd.ids[i]);
  }
  return { rows, speedup, idsMatch, errors };
}

/** Client-side patch-size check; returns the parsed value or an error. */
export function parsePatchSize(raw: string): { value: number } | { error: string } {
  const value = Number(raw.trim());
  if (!Number.isInteger(value)) return { error: "patch size must be an integer" };
  if (value < 2) return { error: "patch size must be at least 2" };
  return { value };
}
