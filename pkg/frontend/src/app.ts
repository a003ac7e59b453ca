import { ApiClient } from "./api.js";
import { SearchController } from "./controller.js";
import { activeResult, comparePanel, parsePatchSize } from "./state.js";
import { UiState } from "./state.js";
import { SearchMethod } from "./types.js";

/** DOM glue: binds the controls in index.html to a SearchController. */
export class App {
  private readonly controller: SearchController;
  private imageBitmap: ImageBitmap | null = null;

  private readonly fileInput = this.el<HTMLInputElement>("file");
  private readonly patchSizeInput = this.el<HTMLInputElement>("patch-size");
  private readonly uploadButton = this.el<HTMLButtonElement>("upload");
  private readonly zoomSelect = this.el<HTMLSelectElement>("zoom");
  private readonly kInput = this.el<HTMLInputElement>("k");
  private readonly kLabel = this.el<HTMLSpanElement>("k-label");
  private readonly methodSelect = this.el<HTMLSelectElement>("method");
  private readonly compareToggle = this.el<HTMLInputElement>("compare");
  private readonly banner = this.el<HTMLDivElement>("banner");
  private readonly statusLine = this.el<HTMLDivElement>("status");
  private readonly imageCanvas = this.el<HTMLCanvasElement>("image-canvas");
  private readonly overlayCanvas = this.el<HTMLCanvasElement>("overlay-canvas");
  private readonly thumbs = this.el<HTMLDivElement>("thumbs");
  private readonly compareBox = this.el<HTMLDivElement>("compare-panel");

  constructor(private readonly doc: Document, api: ApiClient) {
    this.controller = new SearchController(api, null, (state) => this.render(state));
    const ctx = this.overlayCanvas.getContext("2d");
    if (ctx) this.controller.attachOverlay(ctx);

    this.uploadButton.addEventListener("click", () => void this.onUpload());
    this.overlayCanvas.addEventListener("click", (ev) => {
      void this.controller.clickAtDisplay(ev.offsetX, ev.offsetY);
    });
    this.zoomSelect.addEventListener("change", () => {
      this.controller.setZoom(Number(this.zoomSelect.value));
      this.paintImage();
    });
    this.kInput.addEventListener("change", () => {
      void this.controller.setK(Number(this.kInput.value));
    });
    this.methodSelect.addEventListener("change", () => {
      void this.controller.setMethod(this.methodSelect.value as SearchMethod);
    });
    this.compareToggle.addEventListener("change", () => {
      void this.controller.setCompare(this.compareToggle.checked);
    });
  }

  private el<T extends HTMLElement>(id: string): T {
    const node = this.doc.getElementById(id);
    if (!node) throw new Error(`missing #${id}`);
    return node as T;
  }

  private async onUpload(): Promise<void> {
    const file = this.fileInput.files?.[0];
    if (!file) {
      this.banner.textContent = "choose an image file first";
      return;
    }
    const parsed = parsePatchSize(this.patchSizeInput.value);
    if ("error" in parsed) {
      this.banner.textContent = parsed.error; // block the submit client-side
      return;
    }
    const meta = await this.controller.upload(file, parsed.value);
    if (!meta) return;
    this.imageBitmap = await createImageBitmap(file);
    this.paintImage();
  }

  private paintImage(): void {
    const session = this.controller.state.session;
    if (!session || !this.imageBitmap) return;
    const zoom = this.controller.zoom;
    const w = session.width * zoom;
    const h = session.height * zoom;
    for (const canvas of [this.imageCanvas, this.overlayCanvas]) {
      canvas.width = w;
      canvas.height = h;
    }
    const ctx = this.imageCanvas.getContext("2d");
    if (!ctx) return;
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(this.imageBitmap, 0, 0, w, h);
  }

  private render(state: UiState): void {
    this.banner.textContent = state.banner ?? "";
    this.banner.hidden = !state.banner;
    this.kLabel.textContent = String(state.k);

    const parts: string[] = [];
    if (state.uploading) parts.push("building features…");
    if (state.session) {
      const s = state.session;
      parts.push(
        `${s.width}×${s.height}, patch ${s.patch_size}, ${s.n_patches} patches`,
      );
    }
    if (state.clampNote) parts.push("click fell in the margin; snapped to the nearest patch");
    this.statusLine.textContent = parts.join(" — ");

    this.renderThumbs(state);
    this.renderCompare(state);
  }

  private renderThumbs(state: UiState): void {
    this.thumbs.replaceChildren();
    const result = activeResult(state);
    if (!result) return;
    for (const n of result.neighbors) {
      const cell = this.doc.createElement("figure");
      const img = this.doc.createElement("img");
      img.src = this.controller.thumbnailUrl(n.patch_id);
      img.width = 64;
      img.height = 64;
      img.alt = `patch ${n.patch_id}`;
      const cap = this.doc.createElement("figcaption");
      cap.textContent = `#${n.patch_id} d=${n.distance.toFixed(4)}`;
      cell.append(img, cap);
      this.thumbs.append(cell);
    }
  }

  private renderCompare(state: UiState): void {
    this.compareBox.replaceChildren();
    this.compareBox.hidden = !state.compare;
    if (!state.compare) return;
    const panel = comparePanel(state);
    if (!panel) return;
    for (const row of panel.rows) {
      const line = this.doc.createElement("div");
      line.textContent =
        `${row.method}: ${(row.elapsedS * 1000).toFixed(2)} ms — [${row.ids.join(", ")}]`;
      this.compareBox.append(line);
    }
    for (const [method, message] of Object.entries(panel.errors)) {
      const chip = this.doc.createElement("div");
      chip.className = "error-chip";
      chip.textContent = `${method} failed: ${message}`;
      this.compareBox.append(chip);
    }
    if (panel.speedup !== null) {
      const line = this.doc.createElement("div");
      const match = panel.idsMatch ? "results match" : "results differ";
      line.textContent = `kd-tree is ${panel.speedup.toFixed(1)}× faster — ${match}`;
      this.compareBox.append(line);
    }
  }
}
