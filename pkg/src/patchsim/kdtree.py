"""Exact nearest-neighbor tree over feature rows.

Splits are axis-aligned: the dimension with the largest variance, cut at
the lower median. Rows below the cut go left, the rest go right. Queries
use branch-and-bound with squared Euclidean distances and prune a subtree
only when its splitting plane alone already rules it out, so results match
an exhaustive scan exactly, including (distance, id) tie order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InvalidParamsError
from .features import FeatureMatrix

DEFAULT_LEAF_CAPACITY = 16


@dataclass(frozen=True)
class KdTree:
    """Flat array encoding of the tree; node 0 is the root.

    Internal nodes carry (split_dim, split_val, left, right); leaves have
    left == right == -1 and own the id range perm[start:end].
    """

    points: np.ndarray
    split_dim: np.ndarray
    split_val: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    end: np.ndarray
    perm: np.ndarray
    leaf_capacity: int

    @property
    def n_points(self) -> int:
        return int(self.points.shape[0])

    @property
    def n_nodes(self) -> int:
        return int(self.split_dim.shape[0])

    def leaf_slices(self) -> list[tuple[int, int]]:
        """(start, end) of every leaf in depth-first discovery order."""
        return [
            (int(s), int(e))
            for s, e, l in zip(self.start, self.end, self.left)
            if l == -1
        ]


def kd_build(
    data: FeatureMatrix | np.ndarray, leaf_capacity: int = DEFAULT_LEAF_CAPACITY
) -> KdTree:
    """Build the tree over matrix rows (row index == patch id)."""
    pts = data.values if isinstance(data, FeatureMatrix) else np.asarray(data)
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
        raise InvalidParamsError(f"expected a non-empty 2D array, got {pts.shape}")
    if leaf_capacity < 1:
        raise InvalidParamsError(f"leaf capacity {leaf_capacity} must be >= 1")

    split_dim: list[int] = []
    split_val: list[float] = []
    left: list[int] = []
    right: list[int] = []
    start: list[int] = []
    end: list[int] = []
    perm: list[int] = []

    def new_slot() -> int:
        split_dim.append(-1)
        split_val.append(np.nan)
        left.append(-1)
        right.append(-1)
        start.append(-1)
        end.append(-1)
        return len(split_dim) - 1

    root = new_slot()
    stack: list[tuple[int, np.ndarray]] = [(root, np.arange(pts.shape[0], dtype=np.int64))]
    while stack:
        slot, idx = stack.pop()
        sub = pts[idx]
        if idx.shape[0] <= leaf_capacity or bool((sub == sub[0]).all()):
            start[slot] = len(perm)
            perm.extend(idx.tolist())
            end[slot] = len(perm)
            continue
        var = sub.var(axis=0)
        spread = sub.max(axis=0) - sub.min(axis=0)
        var[spread == 0] = -1.0  # a constant column can never split
        dim = int(np.argmax(var))
        vals = sub[:, dim]
        mid = (idx.shape[0] - 1) // 2
        med = float(np.partition(vals, mid)[mid])
        mask = vals < med
        if not mask.any():
            # Lower median equals the minimum; cut at the next distinct
            # value so both sides are non-empty.
            med = float(vals[vals > med].min())
            mask = vals < med
        lslot = new_slot()
        rslot = new_slot()
        split_dim[slot] = dim
        split_val[slot] = med
        left[slot] = lslot
        right[slot] = rslot
        stack.append((rslot, idx[~mask]))
        stack.append((lslot, idx[mask]))

    return KdTree(
        points=pts,
        split_dim=np.asarray(split_dim, dtype=np.int32),
        split_val=np.asarray(split_val, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        start=np.asarray(start, dtype=np.int32),
        end=np.asarray(end, dtype=np.int32),
        perm=np.asarray(perm, dtype=np.int64),
        leaf_capacity=leaf_capacity,
    )


@njit(cache=True)
def _lex_less(da: float, ia: int, db: float, ib: int) -> bool:
    return da < db or (da == db and ia < ib)


@njit(cache=True)
def _query_kernel(pts, split_dim, split_val, left, right, start, end, perm, q, k):
    """k smallest (distance, id) pairs, ascending by that lex order.

    The heap holds reported (rooted) distances so ties resolve in the same
    domain an exhaustive scan sorts in; sqrt is monotone, which keeps the
    plane-distance bound valid after rooting.
    """
    d = pts.shape[1]
    heap_d = np.empty(k, dtype=np.float64)
    heap_i = np.empty(k, dtype=np.int64)
    size = 0
    stack_node = np.empty(split_dim.shape[0] + 1, dtype=np.int32)
    stack_bound = np.empty(split_dim.shape[0] + 1, dtype=np.float64)
    stack_node[0] = 0
    stack_bound[0] = 0.0
    top = 1
    while top > 0:
        top -= 1
        node = stack_node[top]
        bound = np.sqrt(stack_bound[top])
        # Plane-distance pruning: safe only once the heap is full, and only
        # for a strictly worse bound (an equal one may hide a smaller id).
        if size == k and bound > heap_d[0]:
            continue
        while left[node] != -1:
            diff = q[split_dim[node]] - split_val[node]
            if diff < 0.0:
                near, far = left[node], right[node]
            else:
                near, far = right[node], left[node]
            stack_node[top] = far
            stack_bound[top] = diff * diff
            top += 1
            node = near
        for pos in range(start[node], end[node]):
            pid = perm[pos]
            s = 0.0
            for dim in range(d):
                df = pts[pid, dim] - q[dim]
                s += df * df
            s = np.sqrt(s)
            if size < k:
                heap_d[size] = s
                heap_i[size] = pid
                size += 1
                child = size - 1
                while child > 0:
                    parent = (child - 1) // 2
                    if _lex_less(
                        heap_d[parent], heap_i[parent], heap_d[child], heap_i[child]
                    ):
                        heap_d[parent], heap_d[child] = heap_d[child], heap_d[parent]
                        heap_i[parent], heap_i[child] = heap_i[child], heap_i[parent]
                        child = parent
                    else:
                        break
            elif _lex_less(s, pid, heap_d[0], heap_i[0]):
                heap_d[0] = s
                heap_i[0] = pid
                parent = 0
                while True:
                    l = 2 * parent + 1
                    r = l + 1
                    largest = parent
                    if l < size and _lex_less(
                        heap_d[largest], heap_i[largest], heap_d[l], heap_i[l]
                    ):
                        largest = l
                    if r < size and _lex_less(
                        heap_d[largest], heap_i[largest], heap_d[r], heap_i[r]
                    ):
                        largest = r
                    if largest == parent:
                        break
                    heap_d[parent], heap_d[largest] = heap_d[largest], heap_d[parent]
                    heap_i[parent], heap_i[largest] = heap_i[largest], heap_i[parent]
                    parent = largest
    # Pop the max repeatedly to emit ascending order.
    out_d = np.empty(size, dtype=np.float64)
    out_i = np.empty(size, dtype=np.int64)
    live = size
    while live > 0:
        out_d[live - 1] = heap_d[0]
        out_i[live - 1] = heap_i[0]
        live -= 1
        heap_d[0] = heap_d[live]
        heap_i[0] = heap_i[live]
        parent = 0
        while True:
            l = 2 * parent + 1
            r = l + 1
            largest = parent
            if l < live and _lex_less(
                heap_d[largest], heap_i[largest], heap_d[l], heap_i[l]
            ):
                largest = l
            if r < live and _lex_less(
                heap_d[largest], heap_i[largest], heap_d[r], heap_i[r]
            ):
                largest = r
            if largest == parent:
                break
            heap_d[parent], heap_d[largest] = heap_d[largest], heap_d[parent]
            heap_i[parent], heap_i[largest] = heap_i[largest], heap_i[parent]
            parent = largest
    return out_i, out_d


def kd_knn(
    tree: KdTree, query: np.ndarray, k: int, exclude_id: int | None = None
) -> list[tuple[int, float]]:
    """k nearest rows to `query`, ascending by (distance, id)."""
    if k < 1:
        raise InvalidParamsError(f"k must be >= 1, got {k}")
    q = np.ascontiguousarray(query, dtype=np.float64)
    if q.shape != (tree.points.shape[1],):
        raise InvalidParamsError(
            f"query shape {q.shape} does not match dimensionality "
            f"{tree.points.shape[1]}"
        )
    want = k if exclude_id is None else k + 1
    want = min(want, tree.n_points)
    ids, dists = _query_kernel(
        tree.points,
        tree.split_dim,
        tree.split_val,
        tree.left,
        tree.right,
        tree.start,
        tree.end,
        tree.perm,
        q,
        want,
    )
    pairs = list(zip(ids.tolist(), dists.tolist()))
    if exclude_id is not None:
        pairs = [pr for pr in pairs if pr[0] != exclude_id][:k]
    return pairs


def warmup() -> None:
    """Force kernel compilation so first-query latency is predictable."""
    tree = kd_build(np.arange(8.0).reshape(4, 2), leaf_capacity=2)
    kd_knn(tree, np.zeros(2), 1)


__all__ = ["KdTree", "kd_build", "kd_knn", "warmup", "DEFAULT_LEAF_CAPACITY"]
