"""Fairness and utility metrics: bias, balance, node overlap, F1.

The canonical bias value is the Laplacian trace form Tr(Y^T L_S Y); the
ordered double sum (which is twice the trace for symmetric S) is kept
here as an independent brute-force oracle, together with the localized
mean identity it satisfies on binary graphs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MetricsError
from .graph import SparseGraph, laplacian, node_set, trace_quadratic
from .validation import check_node_subset

CSV_HEADER = "f1,bias,balance,nor"


@dataclass(frozen=True)
class MetricsRecord:
    """One evaluation snapshot; balance and nor are optional."""

    f1: float
    bias: float
    balance: float | None = None
    nor: float | None = None

    def to_csv_row(self) -> str:
        parts = [f"{self.f1:.6f}", f"{self.bias:.6f}",
                 "" if self.balance is None else f"{self.balance:.6f}",
                 "" if self.nor is None else f"{self.nor:.6f}"]
        return ",".join(parts)


def bias(y_hat: np.ndarray, s: SparseGraph) -> float:
    """Individual-fairness bias Tr(Y^T L_S Y); zero for empty graphs."""
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y_hat.shape[0] != s.n:
        raise MetricsError(f"y_hat has {y_hat.shape[0]} rows, graph has {s.n}")
    return max(0.0, trace_quadratic(y_hat, laplacian(s)))


def double_sum_bias(y_hat: np.ndarray, s: SparseGraph) -> float:
    """Brute-force ordered double sum sum_ij S_ij ||y_i - y_j||^2.

    Independent oracle: works from the dense matrix and equals exactly
    twice the trace form for symmetric S. Quadratic in n, test-sized only.
    """
    y = np.asarray(y_hat, dtype=np.float64)
    dense = s.to_dense()
    sq = np.einsum("ij,ij->i", y, y)
    dists = sq[:, None] + sq[None, :] - 2.0 * (y @ y.T)
    return float(np.sum(dense * dists))


def balance(f1_model: float, f1_ref: float, bias_model: float,
            bias_ref: float, alpha: float = 0.7) -> float:
    """Weighted mix of relative F1 preserved and relative bias mitigated.

    Both percentages clamp to [0, 1], so the score stays in [0, 1] and
    reaches 1 only with no utility loss and full bias mitigation.
    """
    if f1_ref <= 0:
        raise MetricsError("reference F1 must be positive")
    if bias_ref <= 0:
        raise MetricsError("reference bias must be positive")
    if not 0.0 <= alpha <= 1.0:
        raise MetricsError("alpha must lie in [0, 1]")
    preserved = min(1.0, max(0.0, f1_model / f1_ref))
    mitigated = min(1.0, max(0.0, (bias_ref - bias_model) / bias_ref))
    return alpha * preserved + (1.0 - alpha) * mitigated


def nor(s0: SparseGraph, sk: SparseGraph) -> float:
    """Node overlap ratio |V(s0) & V(sk)| / |V(sk)|."""
    if s0.n != sk.n:
        raise MetricsError("graphs must share the node count")
    v0, vk = node_set(s0), node_set(sk)
    if not vk:
        raise MetricsError("updated similarity graph has no incident nodes")
    return len(v0 & vk) / len(vk)


def micro_f1(probs: np.ndarray, labels: np.ndarray, mask,
             average: str = "micro") -> float:
    """Multi-class F1 of argmax predictions over ``mask``.

    Micro averaging equals accuracy for single-label data; ties break
    toward the lowest class index. ``average="macro"`` averages per-class
    F1 over all classes, counting absent classes as 0.
    """
    probs = np.asarray(probs, dtype=np.float64)
    mask = check_node_subset(mask, probs.shape[0])
    if mask.size == 0:
        raise MetricsError("mask is empty")
    labels = np.asarray(labels, dtype=np.int64)
    preds = probs[mask].argmax(axis=1)
    truth = labels[mask]
    if average == "micro":
        return float(np.mean(preds == truth))
    if average != "macro":
        raise MetricsError(f"unknown average {average!r}")
    scores = []
    for c in range(probs.shape[1]):
        tp = np.count_nonzero((preds == c) & (truth == c))
        fp = np.count_nonzero((preds == c) & (truth != c))
        fn = np.count_nonzero((preds != c) & (truth == c))
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom else 0.0)
    return float(np.mean(scores))


def local_mean_identity_gap(y_hat: np.ndarray, s: SparseGraph) -> float:
    """Gap of the localized-mean rewrite of the double-sum bias.

    For binary symmetric S, sum_ij S_ij ||y_i - y_j||^2 equals
    2 sum_i d_i ||y_i||^2 - 2 sum_i d_i y_i . ybar_i with ybar_i the mean
    of y over i's neighborhood (degree-0 nodes drop out of both sums).
    Returns the absolute difference of the two sides.
    """
    y = np.asarray(y_hat, dtype=np.float64)
    if y.shape[0] != s.n:
        raise MetricsError(f"y_hat has {y.shape[0]} rows, graph has {s.n}")
    if s.values.size and not np.all(s.values == 1.0):
        raise MetricsError("localized-mean identity requires binary weights")
    if s.values.size == 0:
        return 0.0
    full = double_sum_bias(y, s)
    deg = s.degrees()
    neighbor_sum = s.to_csr() @ y  # row i: sum of y_j over N(i)
    rhs = 2.0 * float(deg @ np.einsum("ij,ij->i", y, y))
    rhs -= 2.0 * float(np.einsum("ij,ij->", y, neighbor_sum))
    return abs(full - rhs)
