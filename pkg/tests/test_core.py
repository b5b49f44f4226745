import numpy as np
import pytest

from knnres import (InvalidArgumentError, InvalidDataError, KnnGraph, PointSet,
                    build_knn_graph, hamming_loss, pca_project, rmse)
from oracles import brute_knn


class TestPointSet:
    def test_rejects_nan(self):
        with pytest.raises(InvalidDataError, match="row 1"):
            PointSet(np.array([[0.0, 1.0], [np.nan, 2.0]]))

    def test_rejects_empty_and_1d(self):
        with pytest.raises(InvalidArgumentError):
            PointSet(np.zeros((0, 2)))
        with pytest.raises(InvalidArgumentError):
            PointSet(np.zeros(3))

    def test_immutable(self):
        ps = PointSet(np.array([[1.0, 2.0]]))
        with pytest.raises(ValueError):
            ps.data[0, 0] = 5.0


class TestKnnGraph:
    def test_line_points(self):
        g = build_knn_graph(np.array([[0.0], [1.0], [10.0]]), 1)
        expected = np.zeros((3, 3), dtype=bool)
        expected[0, 1] = expected[1, 0] = expected[2, 1] = True
        assert np.array_equal(g.adjacency, expected)

    def test_complete_graph_at_k_m_minus_1(self):
        rng = np.random.default_rng(3)
        pts = rng.uniform(size=(7, 3))
        g = build_knn_graph(pts, 6)
        assert np.array_equal(g.adjacency, ~np.eye(7, dtype=bool))

    def test_duplicate_points_index_tiebreak(self):
        g = build_knn_graph(np.array([[0.0, 0.0], [0.0, 0.0], [5.0, 5.0]]), 1)
        assert g.adjacency[0, 1] and g.adjacency[1, 0]
        # row 2 is equidistant from 0 and 1; smaller index wins
        assert g.adjacency[2, 0] and not g.adjacency[2, 1]

    def test_k_too_large(self):
        with pytest.raises(InvalidArgumentError):
            build_knn_graph(np.zeros((3, 2)), 3)

    def test_nonfinite_input(self):
        with pytest.raises(InvalidDataError):
            build_knn_graph(np.array([[0.0], [np.inf]]), 1)

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            m = int(rng.integers(3, 51))
            d = int(rng.integers(1, 11))
            k = int(rng.integers(1, m))
            pts = rng.uniform(size=(m, d))
            g = build_knn_graph(pts, k)
            assert np.array_equal(g.adjacency, brute_knn(pts, k))

    def test_isometry_invariance(self):
        rng = np.random.default_rng(5)
        pts = rng.uniform(size=(40, 2))
        theta = 0.9
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        moved = pts @ rot.T + np.array([3.0, -1.5])
        g1 = build_knn_graph(pts, 4)
        g2 = build_knn_graph(moved, 4)
        assert np.array_equal(g1.adjacency, g2.adjacency)

    def test_row_degree_invariant(self):
        rng = np.random.default_rng(8)
        g = build_knn_graph(rng.uniform(size=(20, 3)), 5)
        assert np.all(g.adjacency.sum(axis=1) == 5)
        assert not np.any(np.diag(g.adjacency))


def _graph_from_edges(m, k, edges):
    adj = np.zeros((m, m), dtype=bool)
    for i, j in edges:
        adj[i, j] = True
    return KnnGraph(k=k, adjacency=adj)


class TestHammingLoss:
    def test_identical(self):
        g = build_knn_graph(np.random.default_rng(0).uniform(size=(10, 2)), 3)
        assert hamming_loss(g, g) == 0

    def test_hand_counted(self):
        g1 = _graph_from_edges(3, 1, [(0, 1), (1, 0), (2, 1)])
        g2 = _graph_from_edges(3, 1, [(0, 2), (1, 0), (2, 1)])
        assert hamming_loss(g1, g2) == 2

    def test_disjoint_edges(self):
        m = 6
        g1 = _graph_from_edges(m, 1, [(i, (i + 1) % m) for i in range(m)])
        g2 = _graph_from_edges(m, 1, [(i, (i + 2) % m) for i in range(m)])
        assert hamming_loss(g1, g2) == 2 * m
        assert hamming_loss(g1, g2, normalized=True) == 1.0

    def test_symmetry_and_triangle(self):
        rng = np.random.default_rng(2)
        graphs = [build_knn_graph(rng.uniform(size=(12, 2)), 3) for _ in range(3)]
        a, b, c = graphs
        assert hamming_loss(a, b) == hamming_loss(b, a)
        assert hamming_loss(a, c) <= hamming_loss(a, b) + hamming_loss(b, c)

    def test_shape_mismatch(self):
        g1 = build_knn_graph(np.random.default_rng(0).uniform(size=(5, 2)), 2)
        g2 = build_knn_graph(np.random.default_rng(0).uniform(size=(6, 2)), 2)
        with pytest.raises(InvalidArgumentError):
            hamming_loss(g1, g2)


class TestRmse:
    def test_identical(self):
        pts = np.random.default_rng(0).uniform(size=(8, 3))
        assert rmse(pts, pts) == 0.0

    def test_unit_offset(self):
        pts = np.random.default_rng(1).uniform(size=(9, 2))
        assert rmse(pts + np.array([1.0, 0.0]), pts) == pytest.approx(1.0)

    def test_hand_value(self):
        assert rmse(np.array([[1.0], [3.0]]), np.array([[0.0], [0.0]])) == pytest.approx(
            np.sqrt(5.0)
        )

    def test_symmetry_and_permutation(self):
        rng = np.random.default_rng(4)
        a = rng.uniform(size=(10, 2))
        b = rng.uniform(size=(10, 2))
        assert rmse(a, b) == rmse(b, a)
        perm = rng.permutation(10)
        assert rmse(a[perm], b[perm]) == pytest.approx(rmse(a, b))

    def test_shape_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            rmse(np.zeros((3, 2)), np.zeros((4, 2)))


class TestPca:
    def test_recovers_embedded_axis(self):
        x = np.linspace(-2, 2, 30)
        pts = np.column_stack([x, np.zeros(30)])
        proj, basis = pca_project(pts, 1)
        assert proj.data[:, 0] == pytest.approx(x, abs=1e-12)
        assert basis[:, 0] == pytest.approx([1.0, 0.0], abs=1e-12)

    def test_isotropic_variances_balance(self):
        pts = np.random.default_rng(7).standard_normal((10_000, 3))
        proj, _ = pca_project(pts, 3)
        variances = proj.data.var(axis=0)
        assert variances.max() / variances.min() < 1.1

    def test_full_basis_reconstructs(self):
        pts = np.random.default_rng(9).uniform(size=(50, 4))
        proj, basis = pca_project(pts, 4)
        centered = pts - pts.mean(axis=0)
        assert proj.data @ basis.T == pytest.approx(centered, abs=1e-10)
        assert basis.T @ basis == pytest.approx(np.eye(4), abs=1e-10)

    def test_degenerate_covariance_ok(self):
        pts = np.ones((5, 3))
        proj, basis = pca_project(pts, 2)
        assert np.allclose(proj.data, 0.0)
        assert basis.T @ basis == pytest.approx(np.eye(2), abs=1e-12)

    def test_bad_component_count(self):
        with pytest.raises(InvalidArgumentError):
            pca_project(np.zeros((4, 2)), 3)
