"""Whole-grid feature extraction.

Computes the same nine descriptors as `features.feature_vector` for every
patch at once. Window statistics that are sums over pixels or pixel pairs
come from separable moving sums; co-occurrence energy comes from run
lengths of sorted pair codes; Gabor responses come from batched FFT
convolution. Each path reproduces the per-patch reference semantics, so a
matrix row and `feature_vector` on the same patch agree to float rounding.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidParamsError
from .features import (
    N_FEATURES,
    FeatureMatrix,
    FeatureParams,
    feature_vector,
    gabor_kernel,
    quantize_levels,
)
from .image import PatchGrid

# Beyond this many pixel pairs per patch the int64 moment products used by
# the correlation path could overflow; fall back to the per-patch loop.
_MAX_EXACT_PAIRS = 10**7

# Rough element budgets per processing chunk.
_SORT_CHUNK_ELEMS = 4_000_000
_FFT_CHUNK_PATCHES = 1024


def _moving_window_sums(arr: np.ndarray, wh: int, ww: int) -> np.ndarray:
    """Sum of every wh x ww window, shape (h-wh+1, w-ww+1).

    Two separable passes keep float accumulation error near the window
    scale instead of the image scale; integer input stays exact in int64.
    """
    exact = arr.dtype == np.bool_ or np.issubdtype(arr.dtype, np.integer)
    dtype = np.int64 if exact else np.float64
    work = arr.astype(dtype, copy=False)
    c0 = np.cumsum(work, axis=0)
    strips = np.empty((arr.shape[0] - wh + 1, arr.shape[1]), dtype=dtype)
    strips[0] = c0[wh - 1]
    strips[1:] = c0[wh:] - c0[:-wh]
    c1 = np.cumsum(strips, axis=1)
    out = np.empty((strips.shape[0], arr.shape[1] - ww + 1), dtype=dtype)
    out[:, 0] = c1[:, ww - 1]
    out[:, 1:] = c1[:, ww:] - c1[:, :-ww]
    return out


def _rowwise_hist_features(counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(energy, entropy) per row of integer bin counts; rows must be nonempty."""
    totals = counts.sum(axis=1, keepdims=True)
    probs = counts / totals
    energy = (probs * probs).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(probs > 0, probs * np.log2(probs), 0.0)
    entropy = -terms.sum(axis=1) + 0.0
    return energy, entropy


# ------------------------------------------------------------------- LBP


def _lbp_code_image(px: np.ndarray, params) -> np.ndarray:
    """Codes for every pixel whose full neighborhood fits in the image."""
    r = params.radius
    m, n = px.shape
    center = px[r : m - r, r : n - r].astype(np.int64)
    codes = np.zeros(center.shape, dtype=np.int64)
    for bit, (dx, dy) in enumerate(params.offsets()):
        nb = px[r + dx : m - r + dx, r + dy : n - r + dy].astype(np.int64)
        codes |= (nb >= center).astype(np.int64) << bit
    return codes


def _lbp_block(px: np.ndarray, p: int, params) -> np.ndarray:
    r = params.radius
    if p < 2 * r + 1:
        raise InvalidParamsError(
            f"patch size {p} too small for radius {r} (needs {2 * r + 1})"
        )
    # A patch's interior codes are a crop of the image-wide code map, so one
    # pass serves every patch.
    codes = _lbp_code_image(px, params)
    bin_idx = (codes * params.bins) // params.code_count
    side = p - 2 * r
    gh, gw = px.shape[0] - p + 1, px.shape[1] - p + 1
    counts = np.empty((gh * gw, params.bins), dtype=np.int64)
    for b in range(params.bins):
        counts[:, b] = _moving_window_sums((bin_idx == b), side, side).ravel()
    energy, entropy = _rowwise_hist_features(counts)
    return np.column_stack([energy, entropy])


# ------------------------------------------------------------------ GLCM


def _glcm_pair_views(
    lv: np.ndarray, offset: tuple[int, int]
) -> tuple[np.ndarray, np.ndarray]:
    dx, dy = offset
    m, n = lv.shape
    x0, x1 = max(0, -dx), m - max(0, dx)
    y0, y1 = max(0, -dy), n - max(0, dy)
    first = lv[x0:x1, y0:y1]
    second = lv[x0 + dx : x1 + dx, y0 + dy : y1 + dy]
    return first, second


def _glcm_energy_rows(
    pair_codes: np.ndarray, wh: int, ww: int, pairs_per_patch: int
) -> np.ndarray:
    """sqrt(sum of squared pair-code multiplicities) / T for every window.

    Sorting each window groups equal codes into runs whose lengths are the
    co-occurrence counts, sidestepping per-window levels^2 matrices.
    """
    win = sliding_window_view(pair_codes, (wh, ww))
    gh, gw = win.shape[0], win.shape[1]
    out = np.empty(gh * gw, dtype=np.float64)
    rows_per_chunk = max(1, _SORT_CHUNK_ELEMS // max(1, gw * pairs_per_patch))
    for r0 in range(0, gh, rows_per_chunk):
        r1 = min(gh, r0 + rows_per_chunk)
        block = win[r0:r1].reshape(-1, pairs_per_patch)
        block = np.sort(block, axis=1)
        starts = np.ones(block.shape, dtype=bool)
        starts[:, 1:] = block[:, 1:] != block[:, :-1]
        flat = starts.ravel()
        run_starts = np.flatnonzero(flat)
        run_lengths = np.diff(run_starts, append=flat.size)
        row_of_run = run_starts // pairs_per_patch
        sumsq = np.bincount(
            row_of_run,
            weights=(run_lengths.astype(np.float64)) ** 2,
            minlength=block.shape[0],
        )
        out[r0 * gw : r1 * gw] = np.sqrt(sumsq) / pairs_per_patch
    return out


def _glcm_block(px: np.ndarray, p: int, params) -> np.ndarray:
    dx, dy = params.offset
    if abs(dx) >= p or abs(dy) >= p:
        raise InvalidParamsError(
            f"offset ({dx}, {dy}) leaves no pixel pairs inside a {p}x{p} patch"
        )
    wh, ww = p - abs(dx), p - abs(dy)
    t = wh * ww
    lv = quantize_levels(px, params.levels)
    first, second = _glcm_pair_views(lv, params.offset)
    diff = first - second
    tf = float(t)

    adiff = np.abs(diff)
    contrast = _moving_window_sums(diff * diff, wh, ww).ravel() / tf
    dissimilarity = _moving_window_sums(adiff, wh, ww).ravel() / tf

    # Homogeneity weights take at most `levels` distinct values; counting
    # each exactly keeps the result at reference precision.
    homogeneity = np.zeros(contrast.shape[0], dtype=np.float64)
    for v in np.unique(adiff):
        cnt = _moving_window_sums(adiff == v, wh, ww).ravel()
        homogeneity += cnt * (1.0 / (1.0 + float(v) ** 2))
    homogeneity /= tf

    # Correlation from exact integer moments: T^2 cancels between the
    # covariance and the two standard deviations.
    w_f = _moving_window_sums(first, wh, ww).ravel()
    w_s = _moving_window_sums(second, wh, ww).ravel()
    w_ff = _moving_window_sums(first * first, wh, ww).ravel()
    w_ss = _moving_window_sums(second * second, wh, ww).ravel()
    w_fs = _moving_window_sums(first * second, wh, ww).ravel()
    var_f = (w_ff * t - w_f * w_f).astype(np.float64)
    var_s = (w_ss * t - w_s * w_s).astype(np.float64)
    cov = (w_fs * t - w_f * w_s).astype(np.float64)
    denom = np.sqrt(var_f * var_s)
    correlation = np.ones(contrast.shape[0], dtype=np.float64)
    live = denom > 0
    correlation[live] = cov[live] / denom[live]

    pair_codes = (first * params.levels + second).astype(np.int32)
    energy = _glcm_energy_rows(pair_codes, wh, ww, t)

    return np.column_stack([contrast, dissimilarity, homogeneity, energy, correlation])


# ------------------------------------------------------------------ Gabor


def _gabor_block(px: np.ndarray, p: int, params) -> np.ndarray:
    kern = gabor_kernel(params)
    k = kern.shape[0]
    h = (k - 1) // 2
    size = p + k - 1
    kf = np.fft.fft2(kern, s=(size, size))
    windows = sliding_window_view(px, (p, p))
    gh, gw = windows.shape[0], windows.shape[1]
    n = gh * gw
    flat_windows = windows.reshape(n, p, p)
    bins = params.bins
    energy = np.empty(n, dtype=np.float64)
    entropy = np.empty(n, dtype=np.float64)
    for b0 in range(0, n, _FFT_CHUNK_PATCHES):
        b1 = min(n, b0 + _FFT_CHUNK_PATCHES)
        batch = flat_windows[b0:b1].astype(np.float64)
        spec = np.fft.fft2(batch, s=(size, size), axes=(-2, -1))
        conv = np.fft.ifft2(spec * kf, axes=(-2, -1))[:, h : h + p, h : h + p]
        mag = np.abs(conv)
        flat = mag.reshape(b1 - b0, p * p)
        peak = flat.max(axis=1)
        live = peak > 0
        idx = np.zeros(flat.shape, dtype=np.int64)
        if live.any():
            scaled = flat[live] * (bins / peak[live, None])
            idx[live] = np.minimum(scaled.astype(np.int64), bins - 1)
        rows = np.arange(b1 - b0)[:, None]
        counts = np.bincount(
            (rows * bins + idx).ravel(), minlength=(b1 - b0) * bins
        ).reshape(b1 - b0, bins)
        e_rows, h_rows = _rowwise_hist_features(counts)
        # Zero response collapses to a single occupied bin by convention.
        e_rows[~live] = 1.0
        h_rows[~live] = 0.0
        energy[b0:b1] = e_rows
        entropy[b0:b1] = h_rows
    return np.column_stack([energy, entropy])


# --------------------------------------------------------------- assembly


def _build_by_loop(grid: PatchGrid, params: FeatureParams) -> np.ndarray:
    rows = np.empty((grid.n_patches, N_FEATURES), dtype=np.float64)
    for view in grid.iter_views():
        rows[view.patch_id] = feature_vector(view.pixels, params)
    return rows


def build_feature_matrix(
    grid: PatchGrid, params: FeatureParams | None = None
) -> FeatureMatrix:
    """Raw (unnormalized) feature rows for every patch in grid order."""
    if params is None:
        params = FeatureParams()
    px = grid.image.pixels
    p = grid.patch_size
    dx, dy = params.glcm.offset
    pairs = (p - abs(dx)) * (p - abs(dy)) if (abs(dx) < p and abs(dy) < p) else 0
    # The vectorized co-occurrence path assumes an asymmetric matrix and
    # in-range integer moments; anything else takes the reference loop.
    if params.glcm.symmetric or pairs > _MAX_EXACT_PAIRS:
        values = _build_by_loop(grid, params)
    else:
        values = np.hstack(
            [
                _lbp_block(px, p, params.lbp),
                _glcm_block(px, p, params.glcm),
                _gabor_block(px, p, params.gabor),
            ]
        )
    return FeatureMatrix(values, grid.meta, normalized=False)


__all__ = ["build_feature_matrix"]
