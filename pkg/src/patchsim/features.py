"""Per-patch texture descriptors: binary-pattern, co-occurrence, and Gabor.

Each patch is summarized by nine scalars, always in this order:

    0  lbp_energy          1  lbp_entropy
    2  glcm_contrast       3  glcm_dissimilarity   4  glcm_homogeneity
    5  glcm_energy         6  glcm_correlation
    7  gabor_energy        8  gabor_entropy

The functions here favor clarity over speed and define the reference
semantics; `grid_features.build_feature_matrix` reproduces them with
image-wide vectorization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import convolve2d

from .errors import InvalidParamsError
from .image import GridMeta

FEATURE_NAMES = (
    "lbp_energy",
    "lbp_entropy",
    "glcm_contrast",
    "glcm_dissimilarity",
    "glcm_homogeneity",
    "glcm_energy",
    "glcm_correlation",
    "gabor_energy",
    "gabor_entropy",
)
N_FEATURES = len(FEATURE_NAMES)

GRAY_LEVELS = 256


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


@dataclass(frozen=True)
class LbpParams:
    """Circular binary-pattern settings.

    Neighbors sit at radius `radius` starting due east and proceeding
    counter-clockwise; offsets are rounded to the nearest pixel. Codes are
    histogrammed into `bins` equal-width bins over [0, 2**points).
    """

    points: int = 8
    radius: int = 1
    bins: int = 8

    def __post_init__(self) -> None:
        if self.points < 4 or self.points > 24:
            raise InvalidParamsError(f"neighbor count {self.points} outside [4, 24]")
        if self.radius < 1:
            raise InvalidParamsError(f"radius {self.radius} must be >= 1")
        if self.bins < 2 or self.bins > 2**self.points:
            raise InvalidParamsError(
                f"bin count {self.bins} outside [2, {2**self.points}]"
            )

    def offsets(self) -> np.ndarray:
        """(points, 2) integer (dx, dy) displacements, east first, CCW."""
        out = np.empty((self.points, 2), dtype=np.int64)
        for i in range(self.points):
            ang = 2.0 * math.pi * i / self.points
            # x grows downward, so a CCW sweep moves in -x first.
            out[i, 0] = _round_half_up(-self.radius * math.sin(ang))
            out[i, 1] = _round_half_up(self.radius * math.cos(ang))
        return out

    @property
    def code_count(self) -> int:
        return 2**self.points


@dataclass(frozen=True)
class GlcmParams:
    """Co-occurrence settings: displacement (dx, dy) and quantization."""

    offset: tuple[int, int] = (0, 1)
    levels: int = GRAY_LEVELS
    symmetric: bool = False

    def __post_init__(self) -> None:
        dx, dy = self.offset
        if dx == 0 and dy == 0:
            raise InvalidParamsError("co-occurrence offset cannot be (0, 0)")
        if self.levels < 2 or self.levels > GRAY_LEVELS:
            raise InvalidParamsError(
                f"quantization levels {self.levels} outside [2, {GRAY_LEVELS}]"
            )


@dataclass(frozen=True)
class GaborParams:
    """Complex Gabor filter settings.

    `half_extent` of None means ceil(3 * sigma), giving a square kernel of
    side 2 * half_extent + 1. Responses are histogrammed into `bins` bins
    over [0, max(|response|)].
    """

    wavelength: float = 8.0
    orientation: float = 0.0
    phase: float = 0.0
    sigma: float = 4.0
    aspect: float = 0.5
    half_extent: int | None = None
    bins: int = 8

    def __post_init__(self) -> None:
        if not (self.wavelength > 0) or not math.isfinite(self.wavelength):
            raise InvalidParamsError(f"wavelength {self.wavelength} must be positive")
        if not (self.sigma > 0) or not math.isfinite(self.sigma):
            raise InvalidParamsError(f"sigma {self.sigma} must be positive")
        if not (self.aspect > 0) or not math.isfinite(self.aspect):
            raise InvalidParamsError(f"aspect ratio {self.aspect} must be positive")
        if not math.isfinite(self.orientation) or not math.isfinite(self.phase):
            raise InvalidParamsError("orientation and phase must be finite")
        if self.half_extent is not None and self.half_extent < 1:
            raise InvalidParamsError(f"half extent {self.half_extent} must be >= 1")
        if self.bins < 2:
            raise InvalidParamsError(f"bin count {self.bins} must be >= 2")

    @property
    def resolved_half_extent(self) -> int:
        if self.half_extent is not None:
            return self.half_extent
        return int(math.ceil(3.0 * self.sigma))


@dataclass(frozen=True)
class FeatureParams:
    """Settings for all three descriptor families."""

    lbp: LbpParams = field(default_factory=LbpParams)
    glcm: GlcmParams = field(default_factory=GlcmParams)
    gabor: GaborParams = field(default_factory=GaborParams)


def params_from_mapping(options: dict) -> FeatureParams:
    """Build FeatureParams from flat string keys as used by CLI and config.

    Unknown keys raise so typos never silently fall back to defaults.
    """
    lbp_kw: dict = {}
    glcm_kw: dict = {}
    gabor_kw: dict = {}
    table = {
        "lbp_points": (lbp_kw, "points", int),
        "lbp_radius": (lbp_kw, "radius", int),
        "lbp_bins": (lbp_kw, "bins", int),
        "glcm_offset": (glcm_kw, "offset", _parse_offset),
        "glcm_levels": (glcm_kw, "levels", int),
        "gabor_lambda": (gabor_kw, "wavelength", float),
        "gabor_theta": (gabor_kw, "orientation", float),
        "gabor_psi": (gabor_kw, "phase", float),
        "gabor_sigma": (gabor_kw, "sigma", float),
        "gabor_gamma": (gabor_kw, "aspect", float),
        "gabor_bins": (gabor_kw, "bins", int),
    }
    for key, value in options.items():
        if value is None:
            continue
        if key not in table:
            raise InvalidParamsError(f"unknown feature option {key!r}")
        target, name, conv = table[key]
        try:
            target[name] = conv(value)
        except (TypeError, ValueError) as exc:
            raise InvalidParamsError(f"bad value for {key}: {value!r}") from exc
    return FeatureParams(
        lbp=LbpParams(**lbp_kw), glcm=GlcmParams(**glcm_kw), gabor=GaborParams(**gabor_kw)
    )


def _parse_offset(value) -> tuple[int, int]:
    if isinstance(value, (tuple, list)) and len(value) == 2:
        return int(value[0]), int(value[1])
    parts = str(value).replace("(", "").replace(")", "").split(",")
    if len(parts) != 2:
        raise ValueError(f"expected 'dx,dy', got {value!r}")
    return int(parts[0]), int(parts[1])


# ---------------------------------------------------------------- histograms


def normalized_histogram(
    values: np.ndarray, bins: int, value_range: tuple[float, float]
) -> np.ndarray:
    """Equal-width histogram rescaled to sum to 1."""
    lo, hi = value_range
    if bins < 1:
        raise InvalidParamsError(f"bin count {bins} must be >= 1")
    if not hi > lo:
        raise InvalidParamsError(f"empty value range [{lo}, {hi})")
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise InvalidParamsError("cannot histogram an empty sample")
    counts, _ = np.histogram(arr, bins=bins, range=(lo, hi))
    total = counts.sum()
    if total == 0:
        raise InvalidParamsError(f"no samples inside [{lo}, {hi}]")
    return counts / total


def hist_energy(hist: np.ndarray) -> float:
    """Sum of squared bin masses; 1/bins for uniform, 1 for one-hot."""
    h = np.asarray(hist, dtype=np.float64)
    return float((h * h).sum())


def hist_entropy(hist: np.ndarray) -> float:
    """Shannon entropy in bits; zero bins contribute nothing."""
    h = np.asarray(hist, dtype=np.float64)
    nz = h[h > 0]
    return float(-(nz * np.log2(nz)).sum()) + 0.0


# ----------------------------------------------------------- binary patterns


def lbp_code(patch: np.ndarray, cx: int, cy: int, params: LbpParams) -> int:
    """Binary code at one pixel: bit i set when neighbor i >= center."""
    arr = np.asarray(patch)
    r = params.radius
    if not (r <= cx < arr.shape[0] - r and r <= cy < arr.shape[1] - r):
        raise InvalidParamsError(
            f"center ({cx}, {cy}) leaves radius {r} outside the window"
        )
    center = int(arr[cx, cy])
    code = 0
    for bit, (dx, dy) in enumerate(params.offsets()):
        if int(arr[cx + dx, cy + dy]) >= center:
            code |= 1 << bit
    return code


def lbp_map(patch: np.ndarray, params: LbpParams) -> np.ndarray:
    """Codes for every interior pixel (those with all neighbors in bounds)."""
    arr = np.asarray(patch)
    r = params.radius
    m, n = arr.shape
    if m < 2 * r + 1 or n < 2 * r + 1:
        raise InvalidParamsError(
            f"window {m}x{n} too small for radius {r} (needs {2 * r + 1})"
        )
    center = arr[r : m - r, r : n - r].astype(np.int64)
    codes = np.zeros(center.shape, dtype=np.int64)
    for bit, (dx, dy) in enumerate(params.offsets()):
        nb = arr[r + dx : m - r + dx, r + dy : n - r + dy].astype(np.int64)
        codes |= (nb >= center).astype(np.int64) << bit
    return codes


def _lbp_features(patch: np.ndarray, params: LbpParams) -> tuple[float, float]:
    codes = lbp_map(patch, params)
    hist = normalized_histogram(codes, params.bins, (0.0, float(params.code_count)))
    return hist_energy(hist), hist_entropy(hist)


# ------------------------------------------------------------- co-occurrence


def quantize_levels(patch: np.ndarray, levels: int) -> np.ndarray:
    """Map 8-bit values onto [0, levels) by uniform bucketing."""
    arr = np.asarray(patch, dtype=np.int64)
    if levels == GRAY_LEVELS:
        return arr
    return (arr * levels) // GRAY_LEVELS


def glcm(patch: np.ndarray, params: GlcmParams, normalize: bool = True) -> np.ndarray:
    """Co-occurrence matrix of quantized value pairs at the given offset.

    Entry (i, j) counts positions where the value is i and the value one
    offset away is j; only pairs fully inside the patch count. Normalized
    output sums to 1.
    """
    arr = np.asarray(patch)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidParamsError(f"expected a non-empty 2D patch, got {arr.shape}")
    dx, dy = params.offset
    m, n = arr.shape
    if abs(dx) >= m or abs(dy) >= n:
        raise InvalidParamsError(
            f"offset ({dx}, {dy}) leaves no pixel pairs inside a {m}x{n} patch"
        )
    lv = quantize_levels(arr, params.levels)
    x0, x1 = max(0, -dx), m - max(0, dx)
    y0, y1 = max(0, -dy), n - max(0, dy)
    first = lv[x0:x1, y0:y1].ravel()
    second = lv[x0 + dx : x1 + dx, y0 + dy : y1 + dy].ravel()
    pair_codes = first * params.levels + second
    counts = np.bincount(pair_codes, minlength=params.levels**2)
    mat = counts.reshape(params.levels, params.levels).astype(np.float64)
    if params.symmetric:
        mat = mat + mat.T
    if normalize:
        mat = mat / mat.sum()
    return mat


def glcm_metrics(mat: np.ndarray) -> tuple[float, float, float, float, float]:
    """(contrast, dissimilarity, homogeneity, energy, correlation).

    Requires a normalized matrix. Correlation is 1 by convention when
    either marginal has zero spread.
    """
    pm = np.asarray(mat, dtype=np.float64)
    if pm.ndim != 2 or pm.shape[0] != pm.shape[1]:
        raise InvalidParamsError(f"expected a square matrix, got {pm.shape}")
    total = pm.sum()
    if not math.isclose(total, 1.0, rel_tol=0.0, abs_tol=1e-9):
        raise InvalidParamsError(f"matrix sums to {total}, expected 1 (normalize first)")
    n = pm.shape[0]
    i = np.arange(n, dtype=np.float64)[:, None]
    j = np.arange(n, dtype=np.float64)[None, :]
    diff = i - j
    contrast = float((pm * diff**2).sum())
    dissimilarity = float((pm * np.abs(diff)).sum())
    homogeneity = float((pm / (1.0 + diff**2)).sum())
    energy = float(np.sqrt((pm * pm).sum()))
    pi = pm.sum(axis=1)
    pj = pm.sum(axis=0)
    idx = np.arange(n, dtype=np.float64)
    mu_i = float((idx * pi).sum())
    mu_j = float((idx * pj).sum())
    var_i = float(((idx - mu_i) ** 2 * pi).sum())
    var_j = float(((idx - mu_j) ** 2 * pj).sum())
    denom = math.sqrt(var_i) * math.sqrt(var_j)
    if denom == 0.0:
        correlation = 1.0
    else:
        cov = float((pm * (i - mu_i) * (j - mu_j)).sum())
        correlation = cov / denom
    return contrast, dissimilarity, homogeneity, energy, correlation


def _glcm_features(patch: np.ndarray, params: GlcmParams) -> tuple[float, ...]:
    return glcm_metrics(glcm(patch, params, normalize=True))


# -------------------------------------------------------------------- Gabor


def gabor_kernel(params: GaborParams) -> np.ndarray:
    """Complex filter tap grid of side 2 * half_extent + 1.

    The axis along `orientation` carries the carrier wave; the squared
    exponent mixes the rotated coordinates with the aspect ratio squared.
    """
    h = params.resolved_half_extent
    x = np.arange(-h, h + 1, dtype=np.float64)[:, None]  # downward
    y = np.arange(-h, h + 1, dtype=np.float64)[None, :]  # rightward
    ct, st = math.cos(params.orientation), math.sin(params.orientation)
    xr = x * ct + y * st
    yr = -x * st + y * ct
    envelope = np.exp(-(xr**2 + (params.aspect**2) * yr**2) / (2.0 * params.sigma**2))
    arg = 2.0 * math.pi * xr / params.wavelength + params.phase
    return envelope * (np.cos(arg) + 1j * np.sin(arg))


def gabor_response(patch: np.ndarray, params: GaborParams) -> np.ndarray:
    """Magnitude of the zero-padded complex convolution, same size as input."""
    arr = np.asarray(patch, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidParamsError(f"expected a non-empty 2D patch, got {arr.shape}")
    kern = gabor_kernel(params)
    re = convolve2d(arr, kern.real, mode="same", boundary="fill", fillvalue=0.0)
    im = convolve2d(arr, kern.imag, mode="same", boundary="fill", fillvalue=0.0)
    return np.hypot(re, im)


def _gabor_features(patch: np.ndarray, params: GaborParams) -> tuple[float, float]:
    mag = gabor_response(patch, params)
    peak = float(mag.max())
    if peak == 0.0:
        # Uniform zero response: all mass in one bin by convention.
        return 1.0, 0.0
    hist = normalized_histogram(mag, params.bins, (0.0, peak))
    return hist_energy(hist), hist_entropy(hist)


# ------------------------------------------------------------ feature vector


def feature_vector(patch: np.ndarray, params: FeatureParams | None = None) -> np.ndarray:
    """All nine descriptors of a single patch, in FEATURE_NAMES order."""
    if params is None:
        params = FeatureParams()
    arr = np.asarray(patch)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidParamsError(f"expected a non-empty 2D patch, got {arr.shape}")
    le, lh = _lbp_features(arr, params.lbp)
    gc, gd, gh, ge, gr = _glcm_features(arr, params.glcm)
    be, bh = _gabor_features(arr, params.gabor)
    return np.array([le, lh, gc, gd, gh, ge, gr, be, bh], dtype=np.float64)


# ------------------------------------------------------------ feature matrix


@dataclass(frozen=True)
class FeatureMatrix:
    """Per-patch feature rows plus the grid they were computed on.

    `col_min`/`col_max` record the pre-normalization column ranges so the
    same affine map can be replayed on later vectors; they are None until
    `normalize_minmax` runs.
    """

    values: np.ndarray
    grid: GridMeta
    normalized: bool = False
    col_min: np.ndarray | None = None
    col_max: np.ndarray | None = None

    def __post_init__(self) -> None:
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if vals.ndim != 2 or vals.shape[1] != N_FEATURES:
            raise InvalidParamsError(
                f"expected an (n, {N_FEATURES}) matrix, got {vals.shape}"
            )
        if vals.shape[0] != self.grid.n_patches:
            raise InvalidParamsError(
                f"matrix has {vals.shape[0]} rows but the grid has "
                f"{self.grid.n_patches} patches"
            )
        object.__setattr__(self, "values", vals)
        for name in ("col_min", "col_max"):
            rng = getattr(self, name)
            if rng is not None:
                rng = np.ascontiguousarray(np.asarray(rng, dtype=np.float64))
                if rng.shape != (N_FEATURES,):
                    raise InvalidParamsError(f"{name} must have shape ({N_FEATURES},)")
                object.__setattr__(self, name, rng)

    @property
    def n_patches(self) -> int:
        return int(self.values.shape[0])


def normalize_minmax(matrix: FeatureMatrix) -> FeatureMatrix:
    """Rescale each column to [0, 1]; constant columns collapse to zero.

    Already-normalized input is a fixed point: every column is remapped by
    its own (min, max), which is the identity on [0, 1] columns.
    """
    vals = matrix.values
    lo = vals.min(axis=0)
    hi = vals.max(axis=0)
    span = hi - lo
    out = np.zeros_like(vals)
    live = span > 0
    out[:, live] = (vals[:, live] - lo[live]) / span[live]
    return FeatureMatrix(out, matrix.grid, normalized=True, col_min=lo, col_max=hi)


def apply_minmax(vector: np.ndarray, matrix: FeatureMatrix) -> np.ndarray:
    """Replay a matrix's stored column ranges onto one raw feature vector."""
    if matrix.col_min is None or matrix.col_max is None:
        raise InvalidParamsError("matrix carries no stored column ranges")
    v = np.asarray(vector, dtype=np.float64)
    if v.shape != (N_FEATURES,):
        raise InvalidParamsError(f"expected shape ({N_FEATURES},), got {v.shape}")
    span = matrix.col_max - matrix.col_min
    out = np.zeros(N_FEATURES, dtype=np.float64)
    live = span > 0
    out[live] = (v[live] - matrix.col_min[live]) / span[live]
    return out


__all__ = [
    "FEATURE_NAMES",
    "N_FEATURES",
    "LbpParams",
    "GlcmParams",
    "GaborParams",
    "FeatureParams",
    "params_from_mapping",
    "normalized_histogram",
    "hist_energy",
    "hist_entropy",
    "lbp_code",
    "lbp_map",
    "quantize_levels",
    "glcm",
    "glcm_metrics",
    "gabor_kernel",
    "gabor_response",
    "feature_vector",
    "FeatureMatrix",
    "normalize_minmax",
    "apply_minmax",
]
