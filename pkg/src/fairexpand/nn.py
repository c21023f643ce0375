"""Two-layer GCN with hand-derived backpropagation and Adam.

Dense matrices are plain float64 numpy arrays; randomness always flows
through an explicitly seeded ``numpy.random.Generator`` so two runs with
equal seeds are bitwise identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TrainingError
from .graph import LaplacianMatrix, SparseGraph, trace_quadratic

Rng = np.random.Generator

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
LOG_CLAMP = 1e-12


@dataclass
class AdamState:
    """First/second moment accumulators and step counter for one parameter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, shape) -> "AdamState":
        return cls(np.zeros(shape), np.zeros(shape), 0)

    def copy(self) -> "AdamState":
        return AdamState(self.m.copy(), self.v.copy(), self.t)


@dataclass
class GcnModel:
    """Weights and optimizer state of a two-layer graph convolution net."""

    w1: np.ndarray
    w2: np.ndarray
    adam1: AdamState
    adam2: AdamState

    @classmethod
    def init(cls, d_in: int, hidden: int, d_out: int, rng: Rng) -> "GcnModel":
        w1 = glorot_init(d_in, hidden, rng)
        w2 = glorot_init(hidden, d_out, rng)
        return cls(w1, w2, AdamState.zeros(w1.shape), AdamState.zeros(w2.shape))

    def copy(self) -> "GcnModel":
        return GcnModel(self.w1.copy(), self.w2.copy(),
                        self.adam1.copy(), self.adam2.copy())


def glorot_init(rows: int, cols: int, rng: Rng) -> np.ndarray:
    """Uniform Glorot initialization in +/- sqrt(6 / (rows + cols))."""
    if rows < 1 or cols < 1:
        raise TrainingError("matrix dimensions must be >= 1")
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction for stability."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def gcn_forward(a_hat: SparseGraph, x: np.ndarray, model: GcnModel,
                ax: np.ndarray | None = None):
    """Forward pass: returns (h1, logits, probs).

    h1 = ReLU(A_hat x W1), logits = A_hat h1 W2, probs = softmax(logits).
    ``ax`` optionally carries a precomputed A_hat @ x (it is constant
    across epochs, so training loops cache it).
    """
    if x.shape[0] != a_hat.n:
        raise TrainingError(f"x has {x.shape[0]} rows, graph has {a_hat.n}")
    if x.shape[1] != model.w1.shape[0]:
        raise TrainingError(f"x has {x.shape[1]} cols, w1 expects {model.w1.shape[0]}")
    if ax is None:
        ax = a_hat.to_csr() @ x
    h1 = np.maximum(ax @ model.w1, 0.0)
    logits = (a_hat.to_csr() @ h1) @ model.w2
    if not np.all(np.isfinite(logits)):
        raise TrainingError("non-finite logits in forward pass")
    return h1, logits, softmax_rows(logits)


def cross_entropy(probs: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    """Mean negative log-likelihood of the true class over ``mask``."""
    mask = np.asarray(mask, dtype=np.int64)
    if mask.size == 0:
        raise TrainingError("cross_entropy needs a nonempty mask")
    labels = np.asarray(labels, dtype=np.int64)
    if labels[mask].min() < 0 or labels[mask].max() >= probs.shape[1]:
        raise TrainingError("label outside [0, num_classes)")
    picked = probs[mask, labels[mask]]
    return float(-np.mean(np.log(np.maximum(picked, LOG_CLAMP))))


def combined_backward(a_hat: SparseGraph, x: np.ndarray, model: GcnModel,
                      labels: np.ndarray, mask: np.ndarray,
                      l_fair: LaplacianMatrix, lam: float,
                      ax: np.ndarray | None = None):
    """Loss and exact gradients of cross-entropy + lam * Tr(P^T L P).

    The fairness gradient is seeded at 2 L P on the softmax output P and
    chained through the softmax Jacobian and both convolution layers.
    Returns (loss, grad_w1, grad_w2).
    """
    if lam < 0:
        raise TrainingError("fairness weight must be >= 0")
    a = a_hat.to_csr()
    if ax is None:
        ax = a @ x
    z1 = ax @ model.w1
    h1 = np.maximum(z1, 0.0)
    ah1 = a @ h1
    logits = ah1 @ model.w2
    probs = softmax_rows(logits)

    mask = np.asarray(mask, dtype=np.int64)
    loss = cross_entropy(probs, labels, mask)

    dlogits = np.zeros_like(probs)
    dlogits[mask] = probs[mask]
    dlogits[mask, labels[mask]] -= 1.0
    dlogits /= mask.size

    if lam > 0 and l_fair.n != probs.shape[0]:
        raise TrainingError("fairness Laplacian size does not match output rows")
    if lam > 0:
        loss += lam * trace_quadratic(probs, l_fair)
        g = 2.0 * l_fair.apply(probs)
        # softmax Jacobian per row: dz_c = p_c * (g_c - <g, p>)
        dlogits += lam * probs * (g - np.einsum("ij,ij->i", g, probs)[:, None])

    grad_w2 = ah1.T @ dlogits
    dh1 = a @ (dlogits @ model.w2.T)
    dz1 = np.where(z1 > 0, dh1, 0.0)
    grad_w1 = ax.T @ dz1
    if not np.isfinite(loss):
        raise TrainingError("non-finite loss")
    return loss, grad_w1, grad_w2


def adam_step(param: np.ndarray, grad: np.ndarray, state: AdamState,
              lr: float) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; returns fresh (param, state)."""
    if param.shape != grad.shape:
        raise TrainingError("parameter and gradient shapes differ")
    if lr <= 0:
        raise TrainingError("learning rate must be positive")
    t = state.t + 1
    m = ADAM_BETA1 * state.m + (1.0 - ADAM_BETA1) * grad
    v = ADAM_BETA2 * state.v + (1.0 - ADAM_BETA2) * grad * grad
    m_hat = m / (1.0 - ADAM_BETA1 ** t)
    v_hat = v / (1.0 - ADAM_BETA2 ** t)
    new_param = param - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return new_param, AdamState(m, v, t)


def finite_difference_check(loss_fn, param: np.ndarray,
                            analytic_grad: np.ndarray,
                            step: float = 1e-5) -> float:
    """Max relative error of ``analytic_grad`` against central differences.

    The denominator is max(|analytic|, |numeric|, 1e-8) per entry.
    """
    if step <= 0:
        raise TrainingError("step must be positive")
    worst = 0.0
    it = np.nditer(param, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = param[idx]
        param[idx] = orig + step
        up = loss_fn(param)
        param[idx] = orig - step
        down = loss_fn(param)
        param[idx] = orig
        if not (np.isfinite(up) and np.isfinite(down)):
            raise TrainingError("non-finite loss during finite differences")
        fd = (up - down) / (2.0 * step)
        a = analytic_grad[idx]
        err = abs(a - fd) / max(abs(a), abs(fd), 1e-8)
        worst = max(worst, err)
    return worst
