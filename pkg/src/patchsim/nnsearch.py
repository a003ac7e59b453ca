"""Neighbor search over feature rows: exhaustive scan and tree-backed.

Distances accumulate dimension by dimension in index order everywhere, so
the exhaustive scan and the tree return bitwise-identical values and ties
resolve identically (ascending id). Cosine distance is half the squared
distance between unit vectors, which equals 1 - cos(angle) but makes the
self-distance of any nonzero vector exactly zero.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParamsError, OutOfBoundsError
from .features import FeatureMatrix
from .kdtree import KdTree, kd_build, kd_knn

METHOD_BRUTE = "brute"
METHOD_KDTREE = "kdtree"
METHODS = (METHOD_BRUTE, METHOD_KDTREE)

METRIC_COSINE = "cosine"
METRIC_EUCLIDEAN = "euclidean"
METRICS = (METRIC_COSINE, METRIC_EUCLIDEAN)


# ----------------------------------------------------------------- metrics


def euclidean_distance(a: np.ndarray, b: np.ndarray) -> float:
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape or av.ndim != 1:
        raise InvalidParamsError(f"shape mismatch: {av.shape} vs {bv.shape}")
    s = 0.0
    for d in range(av.shape[0]):
        df = av[d] - bv[d]
        s += df * df
    return float(np.sqrt(s))


def _sq_norm(v: np.ndarray) -> float:
    s = 0.0
    for d in range(v.shape[0]):
        s += v[d] * v[d]
    return s


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """1 - cos(angle), in [0, 2].

    Conventions: two zero vectors are at distance 0, a zero and a nonzero
    vector at distance 1.
    """
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape or av.ndim != 1:
        raise InvalidParamsError(f"shape mismatch: {av.shape} vs {bv.shape}")
    na = float(np.sqrt(_sq_norm(av)))
    nb = float(np.sqrt(_sq_norm(bv)))
    if na == 0.0 and nb == 0.0:
        return 0.0
    if na == 0.0 or nb == 0.0:
        return 1.0
    s = 0.0
    for d in range(av.shape[0]):
        df = av[d] / na - bv[d] / nb
        s += df * df
    return min(s / 2.0, 2.0)


def _euclidean_to_all(values: np.ndarray, q: np.ndarray) -> np.ndarray:
    acc = np.zeros(values.shape[0], dtype=np.float64)
    for d in range(values.shape[1]):
        diff = values[:, d] - q[d]
        acc += diff * diff
    return np.sqrt(acc)


def _cosine_to_all(values: np.ndarray, q: np.ndarray) -> np.ndarray:
    sq = np.zeros(values.shape[0], dtype=np.float64)
    for d in range(values.shape[1]):
        sq += values[:, d] * values[:, d]
    norms = np.sqrt(sq)
    nq = float(np.sqrt(_sq_norm(q)))
    zero_rows = norms == 0.0
    if nq == 0.0:
        return np.where(zero_rows, 0.0, 1.0)
    safe = np.where(zero_rows, 1.0, norms)
    acc = np.zeros(values.shape[0], dtype=np.float64)
    for d in range(values.shape[1]):
        diff = values[:, d] / safe - q[d] / nq
        acc += diff * diff
    out = np.minimum(acc / 2.0, 2.0)
    out[zero_rows] = 1.0
    return out


def distances_to_all(values: np.ndarray, q: np.ndarray, metric: str) -> np.ndarray:
    if metric == METRIC_COSINE:
        return _cosine_to_all(values, q)
    if metric == METRIC_EUCLIDEAN:
        return _euclidean_to_all(values, q)
    raise InvalidParamsError(f"unknown metric {metric!r}")


# ------------------------------------------------------------ result types


@dataclass(frozen=True)
class Neighbor:
    patch_id: int
    x: int
    y: int
    distance: float

    def to_dict(self) -> dict:
        return {
            "patch_id": self.patch_id,
            "x": self.x,
            "y": self.y,
            "distance": self.distance,
        }


@dataclass(frozen=True)
class QueryResult:
    query_id: int
    query_x: int
    query_y: int
    patch_size: int
    method: str
    metric: str
    k: int
    neighbors: tuple[Neighbor, ...]
    elapsed_s: float

    def to_dict(self) -> dict:
        return {
            "query": {"patch_id": self.query_id, "x": self.query_x, "y": self.query_y},
            "patch_size": self.patch_size,
            "method": self.method,
            "metric": self.metric,
            "k": self.k,
            "neighbors": [nb.to_dict() for nb in self.neighbors],
            "elapsed_s": self.elapsed_s,
        }


# ------------------------------------------------------------ brute search


def _select_ascending(dists: np.ndarray, kk: int) -> np.ndarray:
    """Indices of the kk smallest values, ties broken by ascending index."""
    n = dists.shape[0]
    if kk >= n:
        cand = np.arange(n)
    else:
        part = np.argpartition(dists, kk - 1)[:kk]
        thresh = dists[part].max()
        cand = np.flatnonzero(dists <= thresh)
    order = np.lexsort((cand, dists[cand]))
    return cand[order[:kk]]


def brute_knn(
    matrix: FeatureMatrix,
    patch_id: int,
    k: int,
    metric: str = METRIC_COSINE,
    exclude_self: bool = False,
) -> QueryResult:
    """Exhaustive k-nearest-neighbor scan for one patch row."""
    if k < 1:
        raise InvalidParamsError(f"k must be >= 1, got {k}")
    if metric not in METRICS:
        raise InvalidParamsError(f"unknown metric {metric!r}")
    n = matrix.n_patches
    if not (0 <= patch_id < n):
        raise OutOfBoundsError(f"patch id {patch_id} outside [0, {n})")
    q = matrix.values[patch_id]
    t0 = time.perf_counter()
    dists = distances_to_all(matrix.values, q, metric)
    work = dists
    avail = n
    if exclude_self:
        work = dists.copy()
        work[patch_id] = np.inf
        avail = n - 1
    kk = min(k, avail)
    ids = _select_ascending(work, kk) if kk > 0 else np.empty(0, dtype=np.int64)
    elapsed = time.perf_counter() - t0
    neighbors = tuple(
        Neighbor(int(i), *matrix.grid.patch_coords(int(i)), float(dists[i]))
        for i in ids
    )
    qx, qy = matrix.grid.patch_coords(patch_id)
    return QueryResult(
        query_id=patch_id,
        query_x=qx,
        query_y=qy,
        patch_size=matrix.grid.patch_size,
        method=METHOD_BRUTE,
        metric=metric,
        k=k,
        neighbors=neighbors,
        elapsed_s=elapsed,
    )


def kdtree_knn(
    matrix: FeatureMatrix,
    tree: KdTree,
    patch_id: int,
    k: int,
    exclude_self: bool = False,
) -> QueryResult:
    """Tree-backed Euclidean k-nearest-neighbor query for one patch row."""
    if k < 1:
        raise InvalidParamsError(f"k must be >= 1, got {k}")
    n = matrix.n_patches
    if not (0 <= patch_id < n):
        raise OutOfBoundsError(f"patch id {patch_id} outside [0, {n})")
    if tree.n_points != n:
        raise InvalidParamsError(
            f"tree holds {tree.n_points} points but the matrix has {n} rows"
        )
    q = matrix.values[patch_id]
    t0 = time.perf_counter()
    pairs = kd_knn(tree, q, k, exclude_id=patch_id if exclude_self else None)
    elapsed = time.perf_counter() - t0
    neighbors = tuple(
        Neighbor(int(i), *matrix.grid.patch_coords(int(i)), float(d)) for i, d in pairs
    )
    qx, qy = matrix.grid.patch_coords(patch_id)
    return QueryResult(
        query_id=patch_id,
        query_x=qx,
        query_y=qy,
        patch_size=matrix.grid.patch_size,
        method=METHOD_KDTREE,
        metric=METRIC_EUCLIDEAN,
        k=k,
        neighbors=neighbors,
        elapsed_s=elapsed,
    )


def query(
    matrix: FeatureMatrix,
    patch_id: int,
    k: int,
    method: str = METHOD_BRUTE,
    metric: str | None = None,
    tree: KdTree | None = None,
    exclude_self: bool = False,
) -> QueryResult:
    """Dispatch one query to the requested backend.

    The exhaustive backend defaults to cosine distance; the tree backend
    searches Euclidean space only and rejects any other metric.
    """
    if method == METHOD_BRUTE:
        return brute_knn(
            matrix, patch_id, k, metric=metric or METRIC_COSINE, exclude_self=exclude_self
        )
    if method == METHOD_KDTREE:
        if metric is not None and metric != METRIC_EUCLIDEAN:
            raise InvalidParamsError(
                f"the kdtree backend is euclidean-only, got metric {metric!r}"
            )
        if tree is None:
            tree = kd_build(matrix)
        return kdtree_knn(matrix, tree, patch_id, k, exclude_self=exclude_self)
    raise InvalidParamsError(f"unknown method {method!r}")


# -------------------------------------------------------------- benchmark


@dataclass(frozen=True)
class MethodStats:
    method: str
    metric: str
    elapsed_s: float
    d_max: float
    speed: float

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "metric": self.metric,
            "elapsed_s": self.elapsed_s,
            "d_max": self.d_max,
            "speed": self.speed,
        }


@dataclass(frozen=True)
class BenchReport:
    query_id: int
    k: int
    n_patches: int
    methods: tuple[MethodStats, ...]
    speedup: float
    ranks: dict
    ids_match: bool | None

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "k": self.k,
            "n_patches": self.n_patches,
            "methods": [ms.to_dict() for ms in self.methods],
            "speedup": self.speedup,
            "ranks": self.ranks,
            "ids_match": self.ids_match,
        }


def _median(values: list[float]) -> float:
    return float(np.median(np.asarray(values)))


def benchmark(
    matrix: FeatureMatrix,
    patch_id: int,
    k: int,
    tree: KdTree | None = None,
    brute_metric: str = METRIC_COSINE,
    repeats: int = 5,
) -> BenchReport:
    """Time both backends on one query and report retrieval speeds.

    Speed is the farthest retrieved distance divided by elapsed time. The
    rank curves record (distance, cumulative seconds) as k grows, one run
    per prefix length. Id lists are compared only when both backends
    search the same metric.
    """
    if repeats < 1:
        raise InvalidParamsError(f"repeats must be >= 1, got {repeats}")
    if tree is None:
        tree = kd_build(matrix)
    brute_times: list[float] = []
    kd_times: list[float] = []
    for _ in range(repeats):
        brute_times.append(
            brute_knn(matrix, patch_id, k, metric=brute_metric).elapsed_s
        )
        kd_times.append(kdtree_knn(matrix, tree, patch_id, k).elapsed_s)
    brute_res = brute_knn(matrix, patch_id, k, metric=brute_metric)
    kd_res = kdtree_knn(matrix, tree, patch_id, k)

    def stats(res: QueryResult, elapsed: float) -> MethodStats:
        d_max = res.neighbors[-1].distance if res.neighbors else 0.0
        return MethodStats(
            method=res.method,
            metric=res.metric,
            elapsed_s=elapsed,
            d_max=d_max,
            speed=d_max / max(elapsed, 1e-12),
        )

    brute_elapsed = _median(brute_times)
    kd_elapsed = _median(kd_times)
    ranks: dict = {METHOD_BRUTE: [], METHOD_KDTREE: []}
    for j in range(1, k + 1):
        bres = brute_knn(matrix, patch_id, j, metric=brute_metric)
        kres = kdtree_knn(matrix, tree, patch_id, j)
        if bres.neighbors:
            ranks[METHOD_BRUTE].append(
                [bres.neighbors[-1].distance, bres.elapsed_s]
            )
        if kres.neighbors:
            ranks[METHOD_KDTREE].append([kres.neighbors[-1].distance, kres.elapsed_s])
    ids_match: bool | None = None
    if brute_metric == METRIC_EUCLIDEAN:
        ids_match = [nb.patch_id for nb in brute_res.neighbors] == [
            nb.patch_id for nb in kd_res.neighbors
        ]
    return BenchReport(
        query_id=patch_id,
        k=k,
        n_patches=matrix.n_patches,
        methods=(stats(brute_res, brute_elapsed), stats(kd_res, kd_elapsed)),
        speedup=brute_elapsed / max(kd_elapsed, 1e-12),
        ranks=ranks,
        ids_match=ids_match,
    )


__all__ = [
    "METHOD_BRUTE",
    "METHOD_KDTREE",
    "METHODS",
    "METRIC_COSINE",
    "METRIC_EUCLIDEAN",
    "METRICS",
    "euclidean_distance",
    "cosine_distance",
    "distances_to_all",
    "Neighbor",
    "QueryResult",
    "brute_knn",
    "kdtree_knn",
    "query",
    "MethodStats",
    "BenchReport",
    "benchmark",
]
