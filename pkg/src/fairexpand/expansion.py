"""Similarity expansion via pluggable link-prediction strategies.

Four variants: raw dot-product scoring, a trained GCN edge predictor,
positive-unlabeled training with internal edge merging (PULL), and the
epsilon-greedy variant that mixes top-probability picks with uniformly
random non-edges to reach isolated regions of the graph.

The encoder normalizes the similarity graph *without* self-loops, so
nodes with no observed similarity keep exactly-zero embeddings and every
pair touching them scores the undifferentiated 0.5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import ExpansionError
from .graph import SparseGraph, build_graph, symmetric_normalize
from .nn import GcnModel, Rng, adam_step

VARIANTS = ("dot_product", "gcn", "pull", "epsilon_greedy_pull")

# All non-edges are enumerated below this node count; above it a sampled
# candidate pool stands in for the out-of-scope factorization machinery.
EXHAUSTIVE_LIMIT = 5000


@dataclass(frozen=True)
class ExpansionStrategy:
    """Which link predictor to run and its training knobs."""

    variant: str = "epsilon_greedy_pull"
    epsilon: float = 0.2
    pull_epochs: int = 3
    inner_iters: int = 200
    internal_add_ratio: float = 0.05
    lp_hidden: int = 16
    lp_lr: float = 0.01

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ExpansionError(f"unknown strategy variant {self.variant!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ExpansionError("epsilon must lie in [0, 1]")
        if self.pull_epochs < 1 or self.inner_iters < 1:
            raise ExpansionError("pull_epochs and inner_iters must be >= 1")
        if not 0.0 <= self.internal_add_ratio <= 1.0:
            raise ExpansionError("internal_add_ratio must lie in [0, 1]")
        if self.lp_hidden < 1 or self.lp_lr <= 0:
            raise ExpansionError("invalid link-predictor size or learning rate")


class ScoredCandidate(NamedTuple):
    i: int
    j: int
    score: float


class SelectedEdge(NamedTuple):
    i: int
    j: int
    score: float
    origin: str  # "greedy" or "random"


@dataclass(frozen=True)
class CandidateScores:
    """Columnar list of scored non-edge pairs (i < j)."""

    i: np.ndarray
    j: np.ndarray
    score: np.ndarray

    def __len__(self) -> int:
        return int(self.i.size)

    def as_tuples(self) -> list[ScoredCandidate]:
        return [ScoredCandidate(int(a), int(b), float(s))
                for a, b, s in zip(self.i, self.j, self.score)]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _pair_scores(z: np.ndarray, ci: np.ndarray, cj: np.ndarray,
                 chunk: int = 500_000) -> np.ndarray:
    dots = np.empty(ci.size)
    for s in range(0, ci.size, chunk):
        e = min(s + chunk, ci.size)
        dots[s:e] = np.einsum("ij,ij->i", z[ci[s:e]], z[cj[s:e]])
    return _sigmoid(dots)


def edge_probability(z: np.ndarray, i: int, j: int,
                     s_current: SparseGraph) -> float:
    """Latent edge probability: 1 for observed pairs, else sigmoid(z_i . z_j)."""
    n = s_current.n
    if not (0 <= i < n and 0 <= j < n):
        raise ExpansionError(f"node index outside [0, {n})")
    if i == j:
        raise ExpansionError("edge probability of a self-pair is undefined")
    if s_current.has_edge(i, j):
        return 1.0
    return float(_sigmoid(np.array([z[i] @ z[j]]))[0])


def _sample_non_edges(s: SparseGraph, count: int, rng: Rng,
                      exclude_keys: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Uniform distinct non-edge pairs (i < j) by rejection sampling."""
    n = s.n
    total = n * (n - 1) // 2
    taken = s.num_edges + (exclude_keys.size if exclude_keys is not None else 0)
    if count > total - taken:
        raise ExpansionError(
            f"graph too dense to sample {count} non-edges ({total - taken} available)")
    banned = s.edge_keys()
    if exclude_keys is not None and exclude_keys.size:
        banned = np.union1d(banned, exclude_keys)

    if n <= EXHAUSTIVE_LIMIT and 2 * count >= total - taken:
        # Dense regime: rejection would crawl, enumerate instead.
        iu, ju = np.triu_indices(n, k=1)
        keep = ~np.isin(iu.astype(np.int64) * n + ju, banned)
        iu, ju = iu[keep], ju[keep]
        pick = np.sort(rng.choice(iu.size, size=count, replace=False))
        return iu[pick].astype(np.int64), ju[pick].astype(np.int64)

    chosen: list[np.ndarray] = []
    chosen_keys = np.zeros(0, dtype=np.int64)
    got = 0
    for _ in range(64):
        if got >= count:
            break
        draw = max(2 * (count - got), 64)
        a = rng.integers(0, n, size=draw)
        b = rng.integers(0, n, size=draw)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        valid = lo != hi
        keys = lo[valid] * n + hi[valid]
        keys = keys[~np.isin(keys, banned)]
        if chosen_keys.size:
            keys = keys[~np.isin(keys, chosen_keys)]
        # first occurrence within the batch, in draw order
        _, first = np.unique(keys, return_index=True)
        keys = keys[np.sort(first)][: count - got]
        if keys.size:
            chosen.append(keys)
            chosen_keys = np.union1d(chosen_keys, keys)
            got += keys.size
    if got < count:
        raise ExpansionError(
            f"graph too dense to sample {count} non-edges (rejection budget exhausted)")
    keys = np.concatenate(chosen)
    return keys // n, keys % n


def negative_sampling(s: SparseGraph, count: int, rng: Rng) -> tuple[np.ndarray, np.ndarray]:
    """``count`` distinct uniform non-edge pairs (i < j) of ``s``."""
    if count < 1:
        raise ExpansionError("count must be >= 1")
    return _sample_non_edges(s, count, rng)


def candidate_pairs(s: SparseGraph, rng: Rng, m_add: int) -> tuple[np.ndarray, np.ndarray]:
    """Candidate non-edges: exhaustive at desk scale, sampled pool above."""
    n = s.n
    if n <= EXHAUSTIVE_LIMIT:
        iu, ju = np.triu_indices(n, k=1)
        iu = iu.astype(np.int64)
        ju = ju.astype(np.int64)
        keep = ~np.isin(iu * n + ju, s.edge_keys())
        return iu[keep], ju[keep]
    pool = min(50 * m_add * int(math.isqrt(n)), n * (n - 1) // 2 - s.num_edges)
    return _sample_non_edges(s, pool, rng)


def link_bce_backward(a_norm: SparseGraph, x: np.ndarray, model: GcnModel,
                      pairs_i: np.ndarray, pairs_j: np.ndarray,
                      targets: np.ndarray):
    """Binary cross-entropy with logits z_i . z_j and its exact gradients.

    ``a_norm`` is the (self-loop-free) normalized similarity graph and z
    the encoder output A(ReLU(A x W1))W2. Returns (loss, grad_w1, grad_w2).
    """
    a = a_norm.to_csr()
    ax = a @ x
    z1 = ax @ model.w1
    h1 = np.maximum(z1, 0.0)
    ah1 = a @ h1
    z = ah1 @ model.w2
    logits = np.einsum("ij,ij->i", z[pairs_i], z[pairs_j])
    # stable BCE-with-logits
    loss = float(np.mean(np.maximum(logits, 0.0) - logits * targets
                         + np.log1p(np.exp(-np.abs(logits)))))
    dlogits = (_sigmoid(logits) - targets) / targets.size
    dz = np.zeros_like(z)
    np.add.at(dz, pairs_i, dlogits[:, None] * z[pairs_j])
    np.add.at(dz, pairs_j, dlogits[:, None] * z[pairs_i])
    grad_w2 = ah1.T @ dz
    dh1 = a @ (dz @ model.w2.T)
    dz1 = np.where(z1 > 0, dh1, 0.0)
    grad_w1 = ax.T @ dz1
    return loss, grad_w1, grad_w2


def _encode(a_norm: SparseGraph, x: np.ndarray, model: GcnModel) -> np.ndarray:
    a = a_norm.to_csr()
    h1 = np.maximum((a @ x) @ model.w1, 0.0)
    return (a @ h1) @ model.w2


def pull_train(s_k: SparseGraph, features: np.ndarray,
               strategy: ExpansionStrategy, rng: Rng,
               m_add: int = 10) -> tuple[np.ndarray, CandidateScores]:
    """Train the positive-unlabeled link predictor on the similarity graph.

    Observed edges are positives, sampled non-edges stand in for negatives,
    and (for the PULL variants) the top-scoring candidates are merged into
    a working copy of the graph between epochs so later epochs train on the
    expected graph. ``s_k`` itself is never mutated; the returned scores
    cover the non-edges of the original graph.
    """
    n = s_k.n
    if features.shape[0] != n:
        raise ExpansionError(f"features have {features.shape[0]} rows, graph has {n}")
    merging = strategy.variant in ("pull", "epsilon_greedy_pull")
    model = GcnModel.init(features.shape[1], strategy.lp_hidden,
                          strategy.lp_hidden, rng)
    cand_i, cand_j = candidate_pairs(s_k, rng, m_add)
    alive = np.ones(cand_i.size, dtype=bool)

    work = s_k
    for epoch in range(1, strategy.pull_epochs + 1):
        if epoch > 1 and merging and alive.any():
            a_norm = symmetric_normalize(work, add_self_loops=False)
            z = _encode(a_norm, features, model)
            idx = np.flatnonzero(alive)
            scores = _pair_scores(z, cand_i[idx], cand_j[idx])
            n_merge = min(math.ceil(strategy.internal_add_ratio * work.num_edges),
                          idx.size)
            if n_merge > 0:
                top = _top_by_score(cand_i[idx], cand_j[idx], scores, n_merge)
                merged = idx[top]
                alive[merged] = False
                ei, ej, ev = work.edge_array()
                edges = np.column_stack([
                    np.r_[ei, cand_i[merged]], np.r_[ej, cand_j[merged]],
                    np.r_[ev, np.ones(merged.size)]])
                work = build_graph(n, edges)
        a_norm = symmetric_normalize(work, add_self_loops=False)
        pos_i, pos_j, _ = work.edge_array()
        n_pos = pos_i.size
        for _ in range(strategy.inner_iters):
            neg_i, neg_j = negative_sampling(work, n_pos, rng)
            pi = np.r_[pos_i, neg_i]
            pj = np.r_[pos_j, neg_j]
            targets = np.r_[np.ones(n_pos), np.zeros(n_pos)]
            _, g1, g2 = link_bce_backward(a_norm, features, model, pi, pj, targets)
            model.w1, model.adam1 = adam_step(model.w1, g1, model.adam1, strategy.lp_lr)
            model.w2, model.adam2 = adam_step(model.w2, g2, model.adam2, strategy.lp_lr)

    z = _encode(symmetric_normalize(work, add_self_loops=False), features, model)
    return z, CandidateScores(cand_i, cand_j, _pair_scores(z, cand_i, cand_j))


def _top_by_score(ci: np.ndarray, cj: np.ndarray, scores: np.ndarray,
                  k: int) -> np.ndarray:
    """Indices of the k best candidates; ties break lexicographically on (i, j)."""
    if k >= scores.size:
        return np.lexsort((cj, ci, -scores))
    thr = np.partition(scores, scores.size - k)[scores.size - k]
    above = np.flatnonzero(scores > thr)
    at = np.flatnonzero(scores == thr)
    at = at[np.lexsort((cj[at], ci[at]))][: k - above.size]
    head = np.concatenate([above, at])
    return head[np.lexsort((cj[head], ci[head], -scores[head]))]


def select_edges(scores: CandidateScores, m_add: int,
                 strategy: ExpansionStrategy,
                 non_edge_sampler: Callable[[int, list[tuple[int, int]]],
                                            tuple[np.ndarray, np.ndarray]],
                 rng: Rng) -> list[SelectedEdge]:
    """Pick the edges to add.

    Greedy variants take the top ``m_add`` scores (lexicographic ties).
    The epsilon-greedy variant takes round((1 - eps) * m_add) greedy picks
    and fills the remainder with uniform draws from all current non-edges,
    excluding the greedy picks; duplicates are forbidden. Random picks
    carry a NaN score until the caller fills it in.
    """
    if m_add < 1:
        raise ExpansionError("m_add must be >= 1")
    n_greedy = m_add
    if strategy.variant == "epsilon_greedy_pull":
        n_greedy = int(math.floor((1.0 - strategy.epsilon) * m_add + 0.5))
    if len(scores) < n_greedy:
        raise ExpansionError(
            f"only {len(scores)} candidates available for {n_greedy} greedy picks")
    top = _top_by_score(scores.i, scores.j, scores.score, n_greedy)
    picked = [SelectedEdge(int(scores.i[t]), int(scores.j[t]),
                           float(scores.score[t]), "greedy") for t in top]
    n_random = m_add - n_greedy
    if n_random > 0:
        ri, rj = non_edge_sampler(n_random, [(e.i, e.j) for e in picked])
        picked.extend(SelectedEdge(int(a), int(b), float("nan"), "random")
                      for a, b in zip(ri, rj))
    return picked


def expand(s_k: SparseGraph, y_k: np.ndarray, strategy: ExpansionStrategy,
           m_add: int, rng: Rng) -> tuple[SparseGraph, list[SelectedEdge]]:
    """Grow the similarity graph by exactly ``m_add`` unit-weight edges.

    Dispatches on the strategy variant, keeps every existing edge intact,
    and returns the new graph together with the selected edges (scores of
    random picks are filled in from the final embeddings).
    """
    if m_add < 1:
        raise ExpansionError("m_add must be >= 1")
    if y_k.shape[0] != s_k.n:
        raise ExpansionError(f"y_k has {y_k.shape[0]} rows, graph has {s_k.n}")

    if strategy.variant == "dot_product":
        ci, cj = candidate_pairs(s_k, rng, m_add)
        z = np.asarray(y_k, dtype=np.float64)
        cand = CandidateScores(ci, cj, _pair_scores(z, ci, cj))
    else:
        z, cand = pull_train(s_k, y_k, strategy, rng, m_add)

    def sampler(count: int, exclude_pairs: list[tuple[int, int]]):
        keys = np.sort(np.array([i * s_k.n + j for i, j in exclude_pairs],
                                dtype=np.int64))
        return _sample_non_edges(s_k, count, rng, exclude_keys=keys)

    selected = select_edges(cand, m_add, strategy, sampler, rng)
    selected = [e if not math.isnan(e.score) else
                SelectedEdge(e.i, e.j, float(_sigmoid(np.array([z[e.i] @ z[e.j]]))[0]),
                             e.origin)
                for e in selected]
    ei, ej, ev = s_k.edge_array()
    edges = np.column_stack([
        np.r_[ei, [e.i for e in selected]],
        np.r_[ej, [e.j for e in selected]],
        np.r_[ev, np.ones(len(selected))]])
    grown = build_graph(s_k.n, edges)
    if grown.num_edges != s_k.num_edges + m_add:
        raise ExpansionError("selected edges collided with existing ones")
    return grown, selected
