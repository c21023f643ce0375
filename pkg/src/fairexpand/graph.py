"""Sparse symmetric graphs and the spectral primitives built on them.

Graphs are stored in compressed-row form with every edge present in both
orientations. The same container backs adjacency matrices, similarity
graphs, and their normalized variants; scipy handles the sparse kernels.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import GraphError


@dataclass(frozen=True)
class SparseGraph:
    """Symmetric nonnegative sparse matrix in CSR layout.

    Invariants: entry (i, j, v) is stored iff (j, i, v) is, column indices
    are strictly increasing within each row, and all values are >= 0.
    Self-loops only appear on graphs produced by self-loop augmentation
    (see :func:`symmetric_normalize`).
    """

    n: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_offsets", np.asarray(self.row_offsets, dtype=np.int64))
        object.__setattr__(self, "col_indices", np.asarray(self.col_indices, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.n < 0:
            raise GraphError("node count must be nonnegative")
        if self.row_offsets.shape != (self.n + 1,):
            raise GraphError("row_offsets must have length n + 1")
        if self.col_indices.shape != self.values.shape:
            raise GraphError("col_indices and values must have equal length")

    @classmethod
    def empty(cls, n: int) -> "SparseGraph":
        return cls(n, np.zeros(n + 1, dtype=np.int64),
                   np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.float64))

    @classmethod
    def from_scipy(cls, mat) -> "SparseGraph":
        csr = sp.csr_array(mat)
        csr.sort_indices()
        return cls(csr.shape[0], csr.indptr.astype(np.int64),
                   csr.indices.astype(np.int64), csr.data.astype(np.float64))

    @cached_property
    def _csr(self):
        return sp.csr_array((self.values, self.col_indices, self.row_offsets),
                            shape=(self.n, self.n))

    def to_csr(self):
        """Return the scipy CSR view (shared, do not mutate)."""
        return self._csr

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    @cached_property
    def _row_ids(self) -> np.ndarray:
        return np.repeat(np.arange(self.n, dtype=np.int64),
                         np.diff(self.row_offsets))

    @property
    def nnz(self) -> int:
        return int(self.values.shape[0])

    @cached_property
    def num_edges(self) -> int:
        """Number of undirected edges (self-loops not counted)."""
        loops = int(np.count_nonzero(self._row_ids == self.col_indices))
        return (self.nnz - loops) // 2

    def degrees(self) -> np.ndarray:
        """Weighted degree of every node."""
        out = np.zeros(self.n, dtype=np.float64)
        np.add.at(out, self._row_ids, self.values)
        return out

    def has_edge(self, i: int, j: int) -> bool:
        lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
        k = np.searchsorted(self.col_indices[lo:hi], j)
        return bool(k < hi - lo and self.col_indices[lo + k] == j)

    def edge_array(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Upper-triangle edges as (i, j, value) arrays with i < j."""
        rows = self._row_ids
        keep = rows < self.col_indices
        return rows[keep], self.col_indices[keep], self.values[keep]

    def edge_keys(self) -> np.ndarray:
        """Sorted int64 keys i * n + j for all stored i < j edges."""
        i, j, _ = self.edge_array()
        return np.sort(i * self.n + j)


def build_graph(n: int, edges) -> SparseGraph:
    """Build a symmetric graph from an (i, j[, value]) edge list.

    The input is symmetrized, and duplicate entries (including reversed
    pairs) are merged by taking the maximum value. Self-loops, indices
    outside [0, n), and negative weights are rejected.
    """
    if n < 1:
        raise GraphError("node count must be >= 1")
    arr = np.asarray(edges, dtype=np.float64)
    if arr.size == 0:
        return SparseGraph.empty(n)
    if arr.ndim != 2 or arr.shape[1] not in (2, 3):
        raise GraphError("edges must be (i, j) or (i, j, value) rows")
    i = arr[:, 0].astype(np.int64)
    j = arr[:, 1].astype(np.int64)
    v = arr[:, 2] if arr.shape[1] == 3 else np.ones(arr.shape[0])
    if np.any((i < 0) | (i >= n) | (j < 0) | (j >= n)):
        raise GraphError(f"edge endpoint outside [0, {n})")
    if np.any(i == j):
        k = int(np.flatnonzero(i == j)[0])
        raise GraphError(f"self-loop ({i[k]}, {j[k]}) is not allowed")
    if np.any(v < 0):
        raise GraphError("edge weights must be nonnegative")

    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    order = np.lexsort((hi, lo))
    lo, hi, v = lo[order], hi[order], v[order]
    starts = np.flatnonzero(np.r_[True, (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])])
    lo, hi = lo[starts], hi[starts]
    v = np.maximum.reduceat(v, starts)

    coo = sp.coo_array((np.r_[v, v], (np.r_[lo, hi], np.r_[hi, lo])), shape=(n, n))
    return SparseGraph.from_scipy(coo)


@dataclass(frozen=True)
class LaplacianMatrix:
    """Graph Laplacian L = D - S split into off-diagonal CSR plus diagonal.

    The CSR arrays hold the negated off-diagonal entries (-S_ij) and
    ``diagonal[i]`` is the weighted degree, so every row sums to zero.
    """

    n: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray
    diagonal: np.ndarray

    @cached_property
    def _offdiag(self):
        return sp.csr_array((self.values, self.col_indices, self.row_offsets),
                            shape=(self.n, self.n))

    def apply(self, y: np.ndarray) -> np.ndarray:
        """Return L @ y for a dense (n, d) matrix y."""
        if y.shape[0] != self.n:
            raise GraphError(f"y has {y.shape[0]} rows, Laplacian expects {self.n}")
        return self.diagonal[:, None] * y + self._offdiag @ y

    def row_sums(self) -> np.ndarray:
        out = np.zeros(self.n)
        np.add.at(out, np.repeat(np.arange(self.n), np.diff(self.row_offsets)), self.values)
        return out + self.diagonal

    def to_dense(self) -> np.ndarray:
        return self._offdiag.toarray() + np.diag(self.diagonal)


def laplacian(s: SparseGraph) -> LaplacianMatrix:
    """Laplacian D_S - S of a similarity graph."""
    return LaplacianMatrix(s.n, s.row_offsets.copy(), s.col_indices.copy(),
                           -s.values, s.degrees())


def trace_quadratic(y: np.ndarray, lap: LaplacianMatrix) -> float:
    """Tr(y^T L y), evaluated sparsely in O((n + m) d).

    Equals one half of the ordered double sum sum_ij S_ij ||y_i - y_j||^2,
    hence nonnegative up to rounding.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2 or y.shape[0] != lap.n:
        raise GraphError(f"y must be ({lap.n}, d), got {y.shape}")
    total = float(lap.diagonal @ np.einsum("ij,ij->i", y, y))
    if lap.values.size:
        rows = np.repeat(np.arange(lap.n), np.diff(lap.row_offsets))
        total += float(lap.values @ np.einsum("ij,ij->i", y[rows], y[lap.col_indices]))
    return total


def symmetric_normalize(a: SparseGraph, add_self_loops: bool = True) -> SparseGraph:
    """Symmetrically normalized adjacency.

    With ``add_self_loops`` (the GCN propagation operator) this is
    D^{-1/2} (A + I) D^{-1/2} with D the degree diagonal of A + I, so
    isolated nodes keep a unit diagonal entry. Without self-loops it is
    D^{-1/2} A D^{-1/2} and rows of isolated nodes stay identically zero,
    which is what the link-prediction encoder relies on.
    """
    mat = a.to_csr().copy()
    if add_self_loops:
        mat = (mat + sp.eye_array(a.n, format="csr")).tocsr()
    deg = np.asarray(mat.sum(axis=1)).ravel()
    with np.errstate(divide="ignore"):
        inv_sqrt = 1.0 / np.sqrt(deg)
    inv_sqrt[~np.isfinite(inv_sqrt)] = 0.0
    d = sp.dia_array((inv_sqrt[None, :], [0]), shape=(a.n, a.n))
    return SparseGraph.from_scipy(d @ mat @ d)


def node_set(s: SparseGraph) -> set[int]:
    """All nodes incident to at least one stored entry."""
    return {int(i) for i in np.flatnonzero(np.diff(s.row_offsets) > 0)}
