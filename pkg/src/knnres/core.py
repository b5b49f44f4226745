"""Point-set containers, kNN graphs, and evaluation metrics.

PointSet is the data carrier used by every other module: an immutable
m x d float64 matrix, one point per row. The kNN graph over a point set
is the topological object the registration penalty is meant to preserve,
and hamming_loss/rmse are the evaluation metrics reported by the CLI.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InvalidArgumentError, InvalidDataError


@dataclass(frozen=True)
class PointSet:
    """An m x d matrix of points (rows are points), finite and immutable."""

    data: np.ndarray
    columns: tuple = None  # optional feature names, kept for reports

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidArgumentError(
                f"point set must be a 2-D array with m,d >= 1, got shape {arr.shape}"
            )
        if not np.isfinite(arr).all():
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise InvalidDataError(
                f"non-finite value at row {bad[0]}, column {bad[1]}"
            )
        if self.columns is not None and len(self.columns) != arr.shape[1]:
            raise InvalidArgumentError(
                f"{len(self.columns)} column names for {arr.shape[1]} columns"
            )
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def m(self):
        return self.data.shape[0]

    @property
    def d(self):
        return self.data.shape[1]


def as_pointset(x) -> PointSet:
    """Coerce an array-like (or pass through a PointSet) with validation."""
    if isinstance(x, PointSet):
        return x
    return PointSet(np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class KnnGraph:
    """Directed k-regular adjacency: entry (i, j) true iff j is among i's k nearest."""

    k: int
    adjacency: np.ndarray = field(repr=False)

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=bool)
        m = adj.shape[0]
        if adj.ndim != 2 or adj.shape[1] != m:
            raise InvalidArgumentError(f"adjacency must be square, got {adj.shape}")
        if np.any(np.diag(adj)):
            raise InvalidArgumentError("adjacency has self-edges on the diagonal")
        if not np.all(adj.sum(axis=1) == self.k):
            raise InvalidArgumentError(f"every row must have exactly k={self.k} edges")
        adj = adj.copy()
        adj.flags.writeable = False
        object.__setattr__(self, "adjacency", adj)

    @property
    def m(self):
        return self.adjacency.shape[0]


def build_knn_graph(ps, k: int) -> KnnGraph:
    """Exact brute-force kNN graph under Euclidean distance.

    Row i's edges go to the k smallest-distance indices j != i; exact ties
    are broken toward the smaller index so results are reproducible.
    """
    ps = as_pointset(ps)
    m = ps.m
    if not 1 <= k < m:
        raise InvalidArgumentError(f"need 1 <= k < m, got k={k}, m={m}")
    d2 = cdist(ps.data, ps.data, "sqeuclidean")
    np.fill_diagonal(d2, np.inf)
    # stable sort keeps index order among equal distances = smaller-index tie-break
    order = np.argsort(d2, axis=1, kind="stable")
    adj = np.zeros((m, m), dtype=bool)
    rows = np.repeat(np.arange(m), k)
    adj[rows, order[:, :k].ravel()] = True
    return KnnGraph(k=k, adjacency=adj)


def hamming_loss(g1: KnnGraph, g2: KnnGraph, normalized: bool = False):
    """Count of directed adjacency cells that differ between two kNN graphs.

    With normalized=True the count is divided by 2*m*k, the maximum possible
    (two k-regular graphs with disjoint edge sets).
    """
    if g1.m != g2.m or g1.k != g2.k:
        raise InvalidArgumentError(
            f"graph mismatch: (m={g1.m}, k={g1.k}) vs (m={g2.m}, k={g2.k})"
        )
    count = int(np.sum(g1.adjacency != g2.adjacency))
    if normalized:
        return count / (2.0 * g1.m * g1.k)
    return count


def rmse(y_hat, y_true) -> float:
    """Root-mean-squared error over row-wise corresponding points."""
    y_hat = as_pointset(y_hat)
    y_true = as_pointset(y_true)
    if y_hat.data.shape != y_true.data.shape:
        raise InvalidArgumentError(
            f"shape mismatch: {y_hat.data.shape} vs {y_true.data.shape}"
        )
    diff = y_hat.data - y_true.data
    return float(np.sqrt(np.mean(np.sum(diff * diff, axis=1))))


def pca_project(ps, n_components: int):
    """Project mean-centered data onto its top principal directions.

    Returns (projected PointSet, d x n_components basis). Components are in
    descending eigenvalue order; each basis vector's largest-magnitude entry
    is made positive so the output is deterministic. A degenerate covariance
    is not an error: eigh pads the basis with an orthonormal completion.
    """
    ps = as_pointset(ps)
    if not 1 <= n_components <= ps.d:
        raise InvalidArgumentError(
            f"need 1 <= n_components <= d={ps.d}, got {n_components}"
        )
    centered = ps.data - ps.data.mean(axis=0)
    cov = (centered.T @ centered) / ps.m
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals, kind="stable")[::-1]
    basis = eigvecs[:, order[:n_components]]
    flip = basis[np.argmax(np.abs(basis), axis=0), np.arange(n_components)] < 0
    basis = np.where(flip, -basis, basis)
    return PointSet(centered @ basis), basis
