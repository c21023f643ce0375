"""FairExpand orchestration: Phase-1 training, Phase-2 expansion, and the
K-step alternation with warm starts, plus the ablation and sweep drivers.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .data import SPLIT_RATIOS, Dataset, Splits, make_splits
from .errors import ConfigError, FairExpandError, TrainingError
from .expansion import ExpansionStrategy, SelectedEdge, VARIANTS, expand
from .graph import SparseGraph, laplacian, symmetric_normalize
from .metrics import MetricsRecord, balance, bias, micro_f1, nor
from .nn import (AdamState, GcnModel, Rng, adam_step, combined_backward,
                 gcn_forward, glorot_init)
from .similarity import SimilaritySpec, build_partial_similarity, build_test_similarity, feature_split


@dataclass(frozen=True)
class FairExpandConfig:
    """Every knob of a FairExpand run; defaults follow the Cora/Citeseer
    desk-scale setup (fairness weight 0.5, epsilon 0.2, 15 iterations)."""

    lambda_: float = 0.5
    epsilon: float = 0.2
    k_iters: int = 15
    m_add: int = 10
    tau: float = 0.4
    s0_count: int = 20
    lr: float = 0.01
    hidden_dim: int = 64
    seed: int = 0
    strategy: str = "epsilon_greedy_pull"
    max_epochs: int = 500
    fine_tune_epochs: int = 100
    patience: int = 20
    min_delta: float = 1e-4
    binary_s0: bool = True
    feature_split_mode: bool = False
    alpha: float = 0.7
    split_seed: int | None = None
    sim_seed: int | None = None
    pull_epochs: int = 3
    inner_iters: int = 200
    internal_add_ratio: float = 0.05
    lp_hidden: int = 16
    lp_lr: float = 0.01

    def __post_init__(self):
        if self.lambda_ < 0:
            raise ConfigError("lambda must be >= 0")
        if self.k_iters < 0:
            raise ConfigError("k_iters must be >= 0")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.max_epochs < 1 or self.fine_tune_epochs < 1:
            raise ConfigError("epoch limits must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must lie in [0, 1]")
        if self.strategy not in VARIANTS:
            raise ConfigError(f"unknown strategy {self.strategy!r}")

    @property
    def resolved_split_seed(self) -> int:
        return self.seed + 101 if self.split_seed is None else self.split_seed

    @property
    def resolved_sim_seed(self) -> int:
        return self.seed + 202 if self.sim_seed is None else self.sim_seed

    def expansion_strategy(self, variant: str | None = None) -> ExpansionStrategy:
        return ExpansionStrategy(
            variant=variant or self.strategy, epsilon=self.epsilon,
            pull_epochs=self.pull_epochs, inner_iters=self.inner_iters,
            internal_add_ratio=self.internal_add_ratio,
            lp_hidden=self.lp_hidden, lp_lr=self.lp_lr)


@dataclass(frozen=True)
class IterationRecord:
    """One row of the trajectory; k=0 is the unregularized reference."""

    k: int
    train_f1: float
    val_f1: float
    test_f1: float
    bias: float
    edges: int
    nor: float | None
    balance: float | None
    epochs: int
    wall_ms: int


@dataclass
class RunLog:
    dataset: str
    strategy: str
    seed: int
    records: list[IterationRecord] = field(default_factory=list)
    trajectory: list[tuple[int, SelectedEdge]] = field(default_factory=list)
    final: MetricsRecord | None = None
    ref_f1: float = 0.0
    ref_bias: float = 0.0


@dataclass
class ReferenceRun:
    """The lambda=0 backbone used as the balance reference."""

    probs: np.ndarray
    train_f1: float
    val_f1: float
    test_f1: float
    bias: float
    epochs: int
    wall_ms: int


class PipelineError(FairExpandError):
    """Raised on mid-run failure; carries the partial RunLog."""

    def __init__(self, message: str, runlog: RunLog):
        super().__init__(message)
        self.runlog = runlog


def train_phase1(a_hat: SparseGraph, features: np.ndarray, labels: np.ndarray,
                 splits: Splits, s_fair: SparseGraph,
                 warm_model: GcnModel | None, config: FairExpandConfig,
                 *, lam: float | None = None, max_epochs: int | None = None,
                 rng: Rng | None = None) -> tuple[GcnModel, np.ndarray, int]:
    """Train the backbone with the fairness regularizer over ``s_fair``.

    Full-batch Adam on cross-entropy + lambda * Tr(P^T L P). Stops once
    validation micro-F1 has not improved by more than ``min_delta`` for
    ``patience`` consecutive epochs; returns the best-validation snapshot
    (model, probs) and the number of epochs run.
    """
    lam = config.lambda_ if lam is None else lam
    limit = config.max_epochs if max_epochs is None else max_epochs
    if warm_model is not None:
        # warm weights, fresh optimizer state
        model = GcnModel(warm_model.w1.copy(), warm_model.w2.copy(),
                         AdamState.zeros(warm_model.w1.shape),
                         AdamState.zeros(warm_model.w2.shape))
    else:
        if rng is None:
            raise TrainingError("need an rng to initialize a fresh model")
        num_classes = int(labels.max()) + 1
        model = GcnModel.init(features.shape[1], config.hidden_dim,
                              num_classes, rng)
    l_fair = laplacian(s_fair)
    ax = a_hat.to_csr() @ features

    # epoch 0 (the untrained / warm state) competes for the snapshot too
    best_model = model.copy()
    _, _, best_probs = gcn_forward(a_hat, features, model, ax=ax)
    best_val = micro_f1(best_probs, labels, splits.val)
    stall = 0
    epoch = 0
    for epoch in range(1, limit + 1):
        try:
            _, g1, g2 = combined_backward(a_hat, features, model, labels,
                                          splits.train, l_fair, lam, ax=ax)
        except TrainingError as exc:
            raise TrainingError(f"training diverged at epoch {epoch}: {exc}") from exc
        model.w1, model.adam1 = adam_step(model.w1, g1, model.adam1, config.lr)
        model.w2, model.adam2 = adam_step(model.w2, g2, model.adam2, config.lr)
        _, _, probs = gcn_forward(a_hat, features, model, ax=ax)
        val_f1 = micro_f1(probs, labels, splits.val)
        if val_f1 > best_val + config.min_delta:
            best_val = val_f1
            best_model = model.copy()
            best_probs = probs
            stall = 0
        else:
            stall += 1
            if stall >= config.patience:
                break
    return best_model, best_probs, epoch


def _warm_start(prev: GcnModel, d_in: int, hidden: int, rng: Rng) -> GcnModel:
    """Reuse previous weights; W1 is re-drawn when the input width changed."""
    if prev.w1.shape[0] == d_in:
        w1 = prev.w1.copy()
    else:
        w1 = glorot_init(d_in, hidden, rng)
    return GcnModel(w1, prev.w2.copy(), AdamState.zeros(w1.shape),
                    AdamState.zeros(prev.w2.shape))


def _run_reference(a_hat, x_clf, dataset, splits, s0, s_test,
                   config) -> ReferenceRun:
    t0 = time.perf_counter()
    _, probs, epochs = train_phase1(a_hat, x_clf, dataset.labels, splits, s0,
                                    None, config, lam=0.0,
                                    rng=np.random.default_rng([config.seed, 0]))
    wall = int((time.perf_counter() - t0) * 1000)
    return ReferenceRun(
        probs=probs,
        train_f1=micro_f1(probs, dataset.labels, splits.train),
        val_f1=micro_f1(probs, dataset.labels, splits.val),
        test_f1=micro_f1(probs, dataset.labels, splits.test),
        bias=bias(probs, s_test),
        epochs=epochs, wall_ms=wall)


def run_fairexpand(dataset: Dataset, config: FairExpandConfig, *,
                   splits: Splits | None = None, s0: SparseGraph | None = None,
                   reference: ReferenceRun | None = None
                   ) -> tuple[np.ndarray, RunLog]:
    """Run the full alternation and return (final embeddings, RunLog).

    k=0 trains the lambda=0 reference used for Balance. Iteration k >= 1
    trains Phase 1 on S^(k-1) (from scratch on the raw features at k=1,
    fine-tuned on the previous embeddings afterwards) and then expands the
    similarity graph by ``m_add`` edges. With ``k_iters=0`` the result is
    the Phase-1-only model on S^(0).
    """
    n = dataset.n
    if splits is None:
        splits = make_splits(n, SPLIT_RATIOS,
                             np.random.default_rng(config.resolved_split_seed))
    sim_rng = np.random.default_rng(config.resolved_sim_seed)
    if config.feature_split_mode:
        x_sim, x_clf = feature_split(dataset.features, sim_rng)
    else:
        x_sim = x_clf = dataset.features
    if s0 is None:
        spec = SimilaritySpec(config.tau, config.s0_count, config.binary_s0)
        s0 = build_partial_similarity(x_sim, spec, sim_rng)
    s_test = build_test_similarity(x_sim, splits.test)
    a_hat = symmetric_normalize(dataset.graph)
    labels = dataset.labels

    if reference is None:
        reference = _run_reference(a_hat, x_clf, dataset, splits, s0, s_test, config)
    log = RunLog(dataset.name, config.strategy, config.seed,
                 ref_f1=reference.test_f1, ref_bias=reference.bias)
    log.records.append(IterationRecord(
        k=0, train_f1=reference.train_f1, val_f1=reference.val_f1,
        test_f1=reference.test_f1, bias=reference.bias, edges=s0.num_edges,
        nor=None, balance=None, epochs=reference.epochs,
        wall_ms=reference.wall_ms))

    rng_model = np.random.default_rng([config.seed, 0])
    try:
        if config.k_iters == 0:
            _, y_final, _ = train_phase1(a_hat, x_clf, labels, splits, s0,
                                         None, config, rng=rng_model)
            s_final = s0
            final_nor = None
        else:
            s_prev, y_prev, model_prev = s0, None, None
            for k in range(1, config.k_iters + 1):
                t0 = time.perf_counter()
                if k == 1:
                    model, probs, epochs = train_phase1(
                        a_hat, x_clf, labels, splits, s_prev, None, config,
                        rng=rng_model)
                else:
                    warm = _warm_start(model_prev, y_prev.shape[1],
                                       config.hidden_dim, rng_model)
                    model, probs, epochs = train_phase1(
                        a_hat, y_prev, labels, splits, s_prev, warm, config,
                        max_epochs=config.fine_tune_epochs)
                rng_k = np.random.default_rng([config.seed, 1000 + k])
                s_next, selected = expand(s_prev, probs,
                                          config.expansion_strategy(),
                                          config.m_add, rng_k)
                wall = int((time.perf_counter() - t0) * 1000)
                test_f1 = micro_f1(probs, labels, splits.test)
                k_bias = bias(probs, s_test)
                log.records.append(IterationRecord(
                    k=k, train_f1=micro_f1(probs, labels, splits.train),
                    val_f1=micro_f1(probs, labels, splits.val),
                    test_f1=test_f1, bias=k_bias, edges=s_next.num_edges,
                    nor=nor(s0, s_next),
                    balance=balance(test_f1, reference.test_f1, k_bias,
                                    reference.bias, config.alpha),
                    epochs=epochs, wall_ms=wall))
                log.trajectory.extend((k, e) for e in selected)
                s_prev, y_prev, model_prev = s_next, probs, model
            y_final, s_final = y_prev, s_prev
            final_nor = nor(s0, s_final)
    except FairExpandError as exc:
        raise PipelineError(str(exc), log) from exc

    final_f1 = micro_f1(y_final, labels, splits.test)
    final_bias = bias(y_final, s_test)
    log.final = MetricsRecord(
        f1=final_f1, bias=final_bias,
        balance=balance(final_f1, reference.test_f1, final_bias,
                        reference.bias, config.alpha),
        nor=final_nor)
    return y_final, log


@dataclass
class AblationRow:
    name: str
    runlog: RunLog | None
    error: str | None = None


def run_ablation(dataset: Dataset, config: FairExpandConfig,
                 strategies: list[str]) -> list[AblationRow]:
    """One run per strategy plus the vanilla GCN and Phase-1-only rows.

    All rows share the split seed, the observed similarity graph, and the
    reference model; a failing row is marked and the rest complete.
    """
    if not strategies:
        raise ConfigError("strategies must be nonempty")
    splits = make_splits(dataset.n, SPLIT_RATIOS,
                         np.random.default_rng(config.resolved_split_seed))
    sim_rng = np.random.default_rng(config.resolved_sim_seed)
    x_sim = dataset.features
    if config.feature_split_mode:
        x_sim, x_clf = feature_split(dataset.features, sim_rng)
    else:
        x_clf = dataset.features
    spec = SimilaritySpec(config.tau, config.s0_count, config.binary_s0)
    s0 = build_partial_similarity(x_sim, spec, sim_rng)
    s_test = build_test_similarity(x_sim, splits.test)
    a_hat = symmetric_normalize(dataset.graph)
    reference = _run_reference(a_hat, x_clf, dataset, splits, s0, s_test, config)

    rows = [("gcn", replace(config, lambda_=0.0, k_iters=0)),
            ("gcn_p1", replace(config, k_iters=0))]
    rows += [(name, replace(config, strategy=name)) for name in strategies]

    out = []
    for name, cfg in rows:
        try:
            _, runlog = run_fairexpand(dataset, cfg, splits=splits, s0=s0,
                                       reference=reference)
            if name == "gcn":
                # the vanilla row *is* the reference: balance is undefined
                runlog.final = replace(runlog.final, balance=None)
            out.append(AblationRow(name, runlog))
        except FairExpandError as exc:
            out.append(AblationRow(name, None, error=str(exc)))
    return out


@dataclass
class SweepCell:
    s0_count: int
    m_add: int
    record: MetricsRecord | None
    error: str | None = None


def run_sweep(dataset: Dataset, base_config: FairExpandConfig,
              s0_counts: list[int], m_adds: list[int]) -> list[SweepCell]:
    """Cartesian (|S0|, m_add) grid of full runs; one MetricsRecord per cell."""
    if not s0_counts or not m_adds:
        raise ConfigError("s0_counts and m_adds must be nonempty")
    cells = []
    for s0_count in s0_counts:
        for m_add in m_adds:
            cfg = replace(base_config, s0_count=int(s0_count), m_add=int(m_add))
            try:
                _, runlog = run_fairexpand(dataset, cfg)
                cells.append(SweepCell(int(s0_count), int(m_add), runlog.final))
            except FairExpandError as exc:
                cells.append(SweepCell(int(s0_count), int(m_add), None,
                                       error=str(exc)))
    return cells
