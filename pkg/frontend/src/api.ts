import { QueryResult, SearchMethod, SessionMeta } from "./types.js";

/** Service error carrying the machine-readable code from the JSON body. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly detail: string,
  ) {
    super(`${code}: ${detail}`);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export type SleepFn = (ms: number) => Promise<void>;

const realSleep: SleepFn = (ms) => new Promise((done) => setTimeout(done, ms));

async function toApiError(response: Response): Promise<ApiError> {
  let code = "http_error";
  let detail = response.statusText || `status ${response.status}`;
  try {
    const body = (await response.json()) as Partial<{ error: string; detail: string }>;
    if (typeof body.error === "string") code = body.error;
    if (typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON body: keep the status text
  }
  return new ApiError(response.status, code, detail);
}

/**
 * Thin client for the patchsim service. The fetch and sleep functions are
 * injectable so tests can run without a network or timers.
 */
export class ApiClient {
  private readonly base: string;

  constructor(
    baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
    private readonly sleep: SleepFn = realSleep,
  ) {
    this.base = baseUrl.replace(/\/+$/, "");
  }

  /** Upload raw image bytes; resolves with the initial session metadata. */
  async upload(
    data: Blob | ArrayBuffer | Uint8Array,
    patchSize: number,
    featureParams: Record<string, string | number> = {},
  ): Promise<SessionMeta> {
    const params = new URLSearchParams({ patch_size: String(patchSize) });
    for (const [key, value] of Object.entries(featureParams)) {
      params.set(key, String(value));
    }
    const response = await this.fetchImpl(`${this.base}/images?${params}`, {
      method: "POST",
      headers: { "content-type": "application/octet-stream" },
      body: data as BodyInit,
    });
    if (!response.ok) throw await toApiError(response);
    return (await response.json()) as SessionMeta;
  }

  async meta(imageId: string): Promise<SessionMeta> {
    const response = await this.fetchImpl(`${this.base}/images/${imageId}`);
    if (!response.ok) throw await toApiError(response);
    return (await response.json()) as SessionMeta;
  }

  /** Poll metadata until the feature build finishes. Rejects on "failed". */
  async waitReady(
    imageId: string,
    { intervalMs = 250, timeoutMs = 180_000 } = {},
  ): Promise<SessionMeta> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const meta = await this.meta(imageId);
      if (meta.status === "ready") return meta;
      if (meta.status === "failed") {
        throw new ApiError(409, "build_failed", meta.detail ?? "feature build failed");
      }
      if (Date.now() >= deadline) {
        throw new ApiError(408, "timeout", "feature build did not finish in time");
      }
      await this.sleep(intervalMs);
    }
  }

  async neighbors(
    imageId: string,
    x: number,
    y: number,
    k: number,
    method: SearchMethod,
    { metric, signal }: { metric?: string; signal?: AbortSignal } = {},
  ): Promise<QueryResult> {
    const params = new URLSearchParams({
      x: String(x),
      y: String(y),
      k: String(k),
      method,
    });
    if (metric) params.set("metric", metric);
    const response = await this.fetchImpl(
      `${this.base}/images/${imageId}/neighbors?${params}`,
      { signal },
    );
    if (!response.ok) throw await toApiError(response);
    return (await response.json()) as QueryResult;
  }

  /** URL of the grayscale crop for one patch, for <img> thumbnails. */
  patchUrl(imageId: string, patchId: number): string {
    return `${this.base}/images/${imageId}/patches/${patchId}.png`;
  }
}
