"""Tree construction rules and exact agreement with an exhaustive scan."""

from __future__ import annotations

import numpy as np
import pytest

from patchsim import InvalidParamsError, kd_build, kd_knn
from patchsim.kdtree import KdTree


def scan_knn(pts: np.ndarray, q: np.ndarray, k: int) -> list[tuple[int, float]]:
    """Reference: full scan sorted by (distance, id)."""
    acc = np.zeros(pts.shape[0])
    for d in range(pts.shape[1]):
        diff = pts[:, d] - q[d]
        acc += diff * diff
    dists = np.sqrt(acc)
    order = np.lexsort((np.arange(len(dists)), dists))
    return [(int(i), float(dists[i])) for i in order[: min(k, len(dists))]]


def walk_split_invariant(tree: KdTree, node: int = 0) -> None:
    """Every left-subtree value < split <= every right-subtree value."""
    if tree.left[node] == -1:
        return
    dim = tree.split_dim[node]
    val = tree.split_val[node]

    def collect(n: int) -> np.ndarray:
        if tree.left[n] == -1:
            ids = tree.perm[tree.start[n] : tree.end[n]]
            return tree.points[ids, dim]
        return np.concatenate([collect(tree.left[n]), collect(tree.right[n])])

    assert (collect(tree.left[node]) < val).all()
    assert (collect(tree.right[node]) >= val).all()
    walk_split_invariant(tree, tree.left[node])
    walk_split_invariant(tree, tree.right[node])


class TestBuild:
    def test_structure_invariants(self):
        rng = np.random.default_rng(1)
        for n in (1, 2, 16, 17, 300):
            pts = rng.random((n, 9))
            tree = kd_build(pts)
            assert tree.n_nodes <= max(1, 2 * n - 1)
            assert sorted(tree.perm.tolist()) == list(range(n))
            for s, e in tree.leaf_slices():
                assert e - s <= tree.leaf_capacity
            walk_split_invariant(tree)

    def test_split_picks_largest_variance_dimension(self):
        pts = np.zeros((40, 3))
        pts[:, 1] = np.linspace(0, 10, 40)  # only dim 1 varies
        tree = kd_build(pts, leaf_capacity=4)
        assert tree.split_dim[0] == 1

    def test_split_value_is_lower_median(self):
        vals = np.array([5.0, 1.0, 9.0, 3.0])  # lower median 3
        pts = np.column_stack([vals, np.zeros(4)])
        tree = kd_build(pts, leaf_capacity=1)
        assert tree.split_val[0] == 3.0

    def test_identical_points_form_one_leaf(self):
        pts = np.tile([[0.3, 0.7]], (100, 1))
        tree = kd_build(pts, leaf_capacity=8)
        assert tree.n_nodes == 1
        assert tree.leaf_slices() == [(0, 100)]

    def test_majority_duplicate_still_splits(self):
        # Lower median equals the minimum here; the cut must move up to the
        # next distinct value instead of creating an empty side.
        pts = np.zeros((33, 2))
        pts[-1, 0] = 1.0
        tree = kd_build(pts, leaf_capacity=4)
        assert tree.n_nodes == 3
        sizes = sorted(e - s for s, e in tree.leaf_slices())
        assert sizes == [1, 32]

    def test_deterministic(self):
        rng = np.random.default_rng(2)
        pts = rng.random((200, 9))
        t1, t2 = kd_build(pts), kd_build(pts)
        assert (t1.split_dim == t2.split_dim).all()
        # leaves carry NaN split values, so compare NaN-aware
        assert np.array_equal(t1.split_val, t2.split_val, equal_nan=True)
        assert (t1.perm == t2.perm).all()

    def test_input_validation(self):
        with pytest.raises(InvalidParamsError):
            kd_build(np.zeros((0, 9)))
        with pytest.raises(InvalidParamsError):
            kd_build(np.zeros(9))
        with pytest.raises(InvalidParamsError):
            kd_build(np.zeros((4, 9)), leaf_capacity=0)


class TestQuery:
    def test_matches_scan_on_random_data(self):
        rng = np.random.default_rng(3)
        for trial in range(30):
            n = int(rng.integers(1, 800))
            pts = rng.random((n, 9))
            if trial % 3 == 0:
                pts = np.round(pts, 1)  # heavy distance ties
            if trial % 5 == 0:
                pts[: n // 2] = pts[0]
            tree = kd_build(pts)
            for k in (1, 4, 23):
                q = pts[int(rng.integers(0, n))] if trial % 2 else rng.random(9)
                assert kd_knn(tree, q, k) == scan_knn(pts, q, k)

    def test_ties_resolve_by_ascending_id(self):
        pts = np.tile([[0.5, 0.5]], (10, 1))
        tree = kd_build(pts, leaf_capacity=2)
        got = kd_knn(tree, np.array([0.0, 0.0]), 4)
        assert [i for i, _ in got] == [0, 1, 2, 3]
        assert len({d for _, d in got}) == 1

    def test_k_larger_than_n_returns_all(self):
        rng = np.random.default_rng(4)
        pts = rng.random((7, 9))
        tree = kd_build(pts)
        q = rng.random(9)
        got = kd_knn(tree, q, 50)
        assert len(got) == 7
        assert got == scan_knn(pts, q, 50)

    def test_on_point_query_returns_zero_distance_first(self):
        rng = np.random.default_rng(5)
        pts = rng.random((50, 9))
        tree = kd_build(pts)
        got = kd_knn(tree, pts[17], 3)
        assert got[0] == (17, 0.0)

    def test_exclude_id_drops_the_query_row(self):
        rng = np.random.default_rng(6)
        pts = np.round(rng.random((200, 9)), 1)
        tree = kd_build(pts)
        for t in (0, 99, 199):
            got = kd_knn(tree, pts[t], 5, exclude_id=t)
            want = [pr for pr in scan_knn(pts, pts[t], 200) if pr[0] != t][:5]
            assert got == want

    def test_query_validation(self):
        tree = kd_build(np.zeros((3, 9)))
        with pytest.raises(InvalidParamsError):
            kd_knn(tree, np.zeros(8), 1)
        with pytest.raises(InvalidParamsError):
            kd_knn(tree, np.zeros(9), 0)
