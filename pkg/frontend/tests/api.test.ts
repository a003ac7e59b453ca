import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { CANONICAL_NEIGHBORS, FakeService } from "./fake_service.js";

const noSleep = () => Promise.resolve();

describe("ApiClient", () => {
  it("uploads bytes with the patch size and feature params in the query", async () => {
    const fake = new FakeService();
    const api = new ApiClient("http://svc:8000/", fake.fetch, noSleep);
    const meta = await api.upload(new Uint8Array(100), 32, { gabor_sigma: 2 });
    expect(meta.image_id).toBe("img-1");
    expect(meta.n_patches).toBe(194 * 229);
    const url = new URL(fake.urls[0]!);
    expect(url.pathname).toBe("/images");
    expect(url.searchParams.get("patch_size")).toBe("32");
    expect(url.searchParams.get("gabor_sigma")).toBe("2");
  });

  it("maps error bodies onto ApiError", async () => {
    const fake = new FakeService({ maxBytes: 10 });
    const api = new ApiClient("http://svc:8000", fake.fetch, noSleep);
    const err = await api.upload(new Uint8Array(100), 32).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(413);
    expect(err.code).toBe("payload_too_large");
    expect(err.detail).toContain("100 bytes");
  });

  it("falls back to a generic code on non-JSON error bodies", async () => {
    const api = new ApiClient(
      "http://svc:8000",
      () => Promise.resolve(new Response("boom", { status: 502, statusText: "Bad Gateway" })),
      noSleep,
    );
    const err = await api.meta("whatever").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.code).toBe("http_error");
    expect(err.status).toBe(502);
  });

  it("polls metadata until the build is ready", async () => {
    const fake = new FakeService({ pendingPolls: 3 });
    const api = new ApiClient("http://svc:8000", fake.fetch, noSleep);
    const first = await api.upload(new Uint8Array(10), 16);
    expect(first.status).toBe("pending");
    const meta = await api.waitReady(first.image_id, { intervalMs: 1 });
    expect(meta.status).toBe("ready");
    const metaPolls = fake.urls.filter((u) => /\/images\/img-1$/.test(new URL(u).pathname));
    expect(metaPolls.length).toBeGreaterThanOrEqual(3);
  });

  it("raises build_failed with the server detail", async () => {
    const api = new ApiClient(
      "http://svc:8000",
      () =>
        Promise.resolve(
          new Response(
            JSON.stringify({
              image_id: "x",
              status: "failed",
              detail: "synthetic failure",
              height: 1,
              width: 1,
              patch_size: 1,
              grid_height: 1,
              grid_width: 1,
              n_patches: 1,
            }),
            { status: 200, headers: { "content-type": "application/json" } },
          ),
        ),
      noSleep,
    );
    const err = await api.waitReady("x").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.code).toBe("build_failed");
    expect(err.detail).toBe("synthetic failure");
  });

  it("gives up when the build outlives the timeout", async () => {
    const fake = new FakeService({ pendingPolls: 10_000 });
    const api = new ApiClient("http://svc:8000", fake.fetch, noSleep);
    await api.upload(new Uint8Array(10), 16);
    const err = await api
      .waitReady("img-1", { intervalMs: 1, timeoutMs: 0 })
      .catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.code).toBe("timeout");
  });

  it("requests neighbors with every query parameter", async () => {
    const fake = new FakeService();
    const api = new ApiClient("http://svc:8000", fake.fetch, noSleep);
    await api.upload(new Uint8Array(10), 32);
    const result = await api.neighbors("img-1", 113, 104, 5, "kdtree");
    expect(result.query).toEqual({ patch_id: 25981, x: 113, y: 104 });
    expect(result.neighbors).toHaveLength(5);
    const url = new URL(fake.urls.at(-1)!);
    expect(url.pathname).toBe("/images/img-1/neighbors");
    expect(Object.fromEntries(url.searchParams)).toEqual({
      x: "113",
      y: "104",
      k: "5",
      method: "kdtree",
    });
  });

  it("passes an explicit metric through and omits it otherwise", async () => {
    const fake = new FakeService();
    const api = new ApiClient("http://svc:8000", fake.fetch, noSleep);
    await api.upload(new Uint8Array(10), 32);
    const euclid = await api.neighbors("img-1", 113, 104, 5, "brute", {
      metric: "euclidean",
    });
    expect(new URL(fake.urls.at(-1)!).searchParams.get("metric")).toBe("euclidean");
    expect(euclid.metric).toBe("euclidean");
    expect(euclid.neighbors.map((n) => n.patch_id)).toEqual(
      CANONICAL_NEIGHBORS.map((n) => n.patch_id),
    );
    // the service picks the default metric per method when omitted
    const cosine = await api.neighbors("img-1", 113, 104, 5, "brute");
    expect(new URL(fake.urls.at(-1)!).searchParams.get("metric")).toBeNull();
    expect(cosine.metric).toBe("cosine");
    expect(cosine.neighbors.map((n) => n.patch_id)).not.toEqual(
      euclid.neighbors.map((n) => n.patch_id),
    );
  });

  it("builds patch thumbnail urls", () => {
    const api = new ApiClient("http://svc:8000///");
    expect(api.patchUrl("img-1", 25981)).toBe(
      "http://svc:8000/images/img-1/patches/25981.png",
    );
  });
});
