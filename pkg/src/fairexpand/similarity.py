"""Similarity construction from node features.

Ground truth is pairwise cosine similarity; the observed partial graph
samples a fixed number of above-threshold pairs, and the evaluation graph
keeps raw (clamped) cosines between test nodes only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SimilarityError
from .graph import SparseGraph, build_graph
from .nn import Rng
from .validation import check_feature_matrix, check_node_subset

_BLOCK = 256


@dataclass(frozen=True)
class SimilaritySpec:
    """Threshold, requested edge count, and weighting of the observed graph."""

    tau: float
    target_count: int
    binary: bool = True

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise SimilarityError(f"tau must lie in (0, 1), got {self.tau}")
        if self.target_count < 1:
            raise SimilarityError("target_count must be >= 1")


def cosine_similarity(x_i: np.ndarray, x_j: np.ndarray) -> float:
    """Cosine of two vectors; 0 when either has zero norm."""
    x_i = np.asarray(x_i, dtype=np.float64).ravel()
    x_j = np.asarray(x_j, dtype=np.float64).ravel()
    if x_i.shape != x_j.shape:
        raise SimilarityError(f"dimension mismatch: {x_i.shape} vs {x_j.shape}")
    ni, nj = np.linalg.norm(x_i), np.linalg.norm(x_j)
    if ni == 0.0 or nj == 0.0:
        return 0.0
    return float(x_i @ x_j / (ni * nj))


def _unit_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    safe = np.where(norms > 0, norms, 1.0)
    return x / safe


def _pairs_above(x: np.ndarray, tau: float):
    """All (i, j, cos) with i < j and cosine > tau, row-blocked for memory."""
    unit = _unit_rows(x)
    n = unit.shape[0]
    out_i, out_j, out_v = [], [], []
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        sims = unit[start:stop] @ unit.T
        local_i, local_j = np.nonzero(sims > tau)
        keep = local_i + start < local_j
        if keep.any():
            out_i.append((local_i[keep] + start).astype(np.int64))
            out_j.append(local_j[keep].astype(np.int64))
            out_v.append(sims[local_i[keep], local_j[keep]])
    if not out_i:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, np.zeros(0)
    return np.concatenate(out_i), np.concatenate(out_j), np.concatenate(out_v)


def build_partial_similarity(x: np.ndarray, spec: SimilaritySpec,
                             rng: Rng) -> SparseGraph:
    """Sample the observed similarity graph.

    Enumerates all pairs with cosine above ``spec.tau`` and keeps a uniform
    sample of ``spec.target_count`` of them (all of them if fewer qualify).
    Edges carry weight 1.0 when ``spec.binary`` else the raw cosine.
    """
    x = check_feature_matrix(x)
    n = x.shape[0]
    if n < 2:
        raise SimilarityError("need at least 2 nodes")
    pi, pj, pv = _pairs_above(x, spec.tau)
    if pi.size == 0:
        raise SimilarityError(
            f"threshold too high for this feature matrix (tau={spec.tau})")
    take = min(spec.target_count, pi.size)
    chosen = np.sort(rng.choice(pi.size, size=take, replace=False))
    weights = np.ones(take) if spec.binary else pv[chosen]
    return build_graph(n, np.column_stack([pi[chosen], pj[chosen], weights]))


def build_test_similarity(x: np.ndarray, test_nodes) -> SparseGraph:
    """Raw-cosine similarity restricted to test-node pairs.

    Keeps every test pair with positive cosine at its cosine value
    (negative cosines clamp to absent); no edge touches a non-test node.
    """
    x = check_feature_matrix(x)
    n = x.shape[0]
    test = np.unique(check_node_subset(test_nodes, n, "test_nodes"))
    if test.size == 0:
        raise SimilarityError("test set is empty")
    unit = _unit_rows(x[test])
    k = test.size
    ei, ej, ev = [], [], []
    for start in range(0, k, _BLOCK):
        stop = min(start + _BLOCK, k)
        sims = unit[start:stop] @ unit.T
        li, lj = np.nonzero(sims > 0.0)
        keep = li + start < lj
        if keep.any():
            ei.append(test[li[keep] + start])
            ej.append(test[lj[keep]])
            ev.append(sims[li[keep], lj[keep]])
    if not ei:
        return SparseGraph.empty(n)
    edges = np.column_stack([np.concatenate(ei), np.concatenate(ej),
                             np.concatenate(ev)])
    return build_graph(n, edges)


def threshold_census(x: np.ndarray, node_subset, taus) -> dict[float, int]:
    """Number of subset pairs with cosine above each threshold."""
    x = check_feature_matrix(x)
    subset = np.unique(check_node_subset(node_subset, x.shape[0], "node_subset"))
    taus = [float(t) for t in taus]
    for t in taus:
        if not 0.0 < t < 1.0:
            raise SimilarityError(f"tau must lie in (0, 1), got {t}")
    unit = _unit_rows(x[subset])
    k = subset.size
    counts = {t: 0 for t in taus}
    for start in range(0, k, _BLOCK):
        stop = min(start + _BLOCK, k)
        sims = unit[start:stop] @ unit.T
        cols = np.arange(k)[None, :]
        upper = cols > (np.arange(start, stop)[:, None])
        for t in taus:
            counts[t] += int(np.count_nonzero((sims > t) & upper))
    return counts


def split_columns(d: int, rng: Rng) -> tuple[np.ndarray, np.ndarray]:
    """Random disjoint column partition into sizes ceil(d/2) and floor(d/2)."""
    if d < 2:
        raise SimilarityError("need at least 2 feature columns to split")
    perm = rng.permutation(d)
    half = (d + 1) // 2
    return np.sort(perm[:half]), np.sort(perm[half:])


def feature_split(x: np.ndarray, rng: Rng) -> tuple[np.ndarray, np.ndarray]:
    """Partition feature columns into a similarity half and a model half."""
    x = check_feature_matrix(x)
    sim_cols, clf_cols = split_columns(x.shape[1], rng)
    return x[:, sim_cols], x[:, clf_cols]
