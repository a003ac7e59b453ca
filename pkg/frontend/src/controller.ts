import { ApiClient } from "./api.js";
import { displayToImage } from "./coords.js";
import { CanvasLike, DrawnRect, drawOverlay } from "./overlay.js";
import {
  Action,
  UiState,
  activeResult,
  initialState,
  reduce,
} from "./state.js";
import { SearchMethod, SessionMeta } from "./types.js";

/**
 * Orchestrates the interactive loop against the HTTP service: upload,
 * click-to-query, overlay redraw, and the method comparison. Owns the
 * state and keeps at most one in-flight request per method; a newer click
 * aborts and supersedes older ones.
 */
export class SearchController {
  state: UiState = initialState;
  zoom = 1;
  /** Patch rectangles drawn by the most recent overlay repaint. */
  lastDrawn: DrawnRect[] = [];

  private inflight: Partial<Record<SearchMethod, AbortController>> = {};

  constructor(
    private readonly api: ApiClient,
    private overlayCtx: CanvasLike | null = null,
    private readonly onChange: (state: UiState) => void = () => {},
  ) {}

  attachOverlay(ctx: CanvasLike): void {
    this.overlayCtx = ctx;
  }

  private dispatch(action: Action): void {
    this.state = reduce(this.state, action);
    this.repaint();
    this.onChange(this.state);
  }

  private repaint(): void {
    const session = this.state.session;
    if (!this.overlayCtx || !session) return;
    this.lastDrawn = drawOverlay(this.overlayCtx, {
      width: session.width * this.zoom,
      height: session.height * this.zoom,
      zoom: this.zoom,
      result: activeResult(this.state),
      click: this.state.click,
    });
  }

  setZoom(zoom: number): void {
    this.zoom = zoom;
    this.repaint();
    this.onChange(this.state);
  }

  /** Upload image bytes and wait for the feature build to finish. */
  async upload(
    data: Blob | ArrayBuffer | Uint8Array,
    patchSize: number,
  ): Promise<SessionMeta | null> {
    this.dispatch({ type: "upload-start" });
    try {
      const first = await this.api.upload(data, patchSize);
      const meta =
        first.status === "ready" ? first : await this.api.waitReady(first.image_id);
      this.dispatch({ type: "upload-ready", meta });
      return meta;
    } catch (err) {
      this.dispatch({ type: "upload-failed", message: describe(err) });
      return null;
    }
  }

  /** Handle a canvas click given in display pixels. */
  async clickAtDisplay(offsetX: number, offsetY: number): Promise<void> {
    const session = this.state.session;
    if (!session) return;
    const point = displayToImage(offsetX, offsetY, this.zoom, session.height, session.width);
    await this.clickAtImage(point.x, point.y);
  }

  /** Handle a click already expressed in image coordinates. */
  async clickAtImage(x: number, y: number): Promise<void> {
    if (!this.state.session) return;
    this.dispatch({ type: "click", x, y });
    await this.runQueries();
  }

  async setK(k: number): Promise<void> {
    this.dispatch({ type: "set-k", k });
    await this.requery();
  }

  async setMethod(method: SearchMethod): Promise<void> {
    this.dispatch({ type: "set-method", method });
    await this.requery();
  }

  async setCompare(on: boolean): Promise<void> {
    this.dispatch({ type: "set-compare", on });
    await this.requery();
  }

  /** Re-run the last click, if any, under the current controls. */
  private async requery(): Promise<void> {
    const click = this.state.click;
    if (!click) return;
    this.dispatch({ type: "click", x: click.x, y: click.y });
    await this.runQueries();
  }

  private async runQueries(): Promise<void> {
    const methods: SearchMethod[] = this.state.compare
      ? ["brute", "kdtree"]
      : [this.state.method];
    await Promise.all(methods.map((m) => this.runOne(m)));
  }

  private async runOne(method: SearchMethod): Promise<void> {
    const session = this.state.session;
    const click = this.state.click;
    if (!session || !click) return;
    const seq = this.state.clickSeq;

    this.inflight[method]?.abort();
    const aborter = new AbortController();
    this.inflight[method] = aborter;

    // comparing methods only makes sense under one metric, and the
    // kd-tree path is euclidean-only, so pin both sides to it
    const metric = this.state.compare ? "euclidean" : undefined;
    this.dispatch({ type: "query-start", method, seq });
    try {
      const result = await this.api.neighbors(
        session.image_id,
        click.x,
        click.y,
        this.state.k,
        method,
        { metric, signal: aborter.signal },
      );
      this.dispatch({ type: "query-ok", method, seq, result });
    } catch (err) {
      if (aborter.signal.aborted) return; // superseded by a newer click
      this.dispatch({ type: "query-error", method, seq, message: describe(err) });
    } finally {
      if (this.inflight[method] === aborter) delete this.inflight[method];
    }
  }

  thumbnailUrl(patchId: number): string {
    const session = this.state.session;
    if (!session) throw new Error("no session");
    return this.api.patchUrl(session.image_id, patchId);
  }
}

function describe(err: unknown): string {
  if (err instanceof Error) return err.message;
  return String(err);
}
