"""Online learners: graph dual averaging, its top-s variant, and baselines.

Every step function takes a :class:`LearnerState` and one gradient, updates
the state in place and returns it. ``run_stream`` drives a learner over a
sample stream, predicting before each update.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .graph import Graph, restrict
from .losses import get_loss
from .projections import (ProjectionConfig, exact_top_s, head_config, model_project,
                          tail_config)

__all__ = [
    "HyperParams",
    "LearnerState",
    "Trajectory",
    "graphda_step",
    "da_iht_step",
    "l1_rda_step",
    "adagrad_step",
    "adam_step",
    "stoiht_step",
    "graphstoiht_step",
    "make_step",
    "run_stream",
    "predict_labels",
    "LEARNERS",
    "GRAPH_LEARNERS",
]

LEARNERS = ("graphda", "da-iht", "l1-rda", "adagrad", "adam", "stoiht", "graphstoiht")
GRAPH_LEARNERS = ("graphda", "graphstoiht")
SPARSITY_LEARNERS = ("graphda", "da-iht", "stoiht", "graphstoiht")


@dataclass(frozen=True)
class HyperParams:
    """All learner hyperparameters; each learner reads the ones it needs."""

    gamma: float = 1.0
    lam: float = 0.0
    rho: float = 0.0
    eta: float = 1.0
    delta: float = 1.0
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    sparsity: int | None = None
    components: int = 1
    budget: float | None = None
    omega: float = 0.1
    max_iter: int = 20
    head_low: int | None = None
    averaged: bool = True

    def __post_init__(self):
        for name in ("gamma", "eta", "delta", "alpha", "epsilon"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("lam", "rho", "omega"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be nonnegative")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if self.sparsity is not None and self.sparsity < 1:
            raise ValueError("sparsity must be >= 1")
        if self.components < 1:
            raise ValueError("components must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    @property
    def model_budget(self) -> float | None:
        """WGM budget, defaulting to ``s - g`` (edges of a g-tree forest on unit costs)."""
        if self.budget is not None:
            return self.budget
        if self.sparsity is None:
            return None
        return float(max(self.sparsity - self.components, 0))

    def updated(self, **changes) -> "HyperParams":
        return replace(self, **changes)

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass
class LearnerState:
    """Iterate, gradient sum, step counter and learner-specific accumulators."""

    w: np.ndarray
    dual_sum: np.ndarray
    t: int = 0
    aux: dict = field(default_factory=dict)
    running_sum_w: np.ndarray | None = None

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        self.dual_sum = np.asarray(self.dual_sum, dtype=np.float64)
        if self.running_sum_w is None:
            self.running_sum_w = np.zeros_like(self.w)

    @classmethod
    def zeros(cls, p: int) -> "LearnerState":
        return cls(np.zeros(p), np.zeros(p), 0, {}, np.zeros(p))

    @property
    def w_bar(self) -> np.ndarray:
        if self.t == 0:
            return np.zeros_like(self.w)
        return self.running_sum_w / self.t


def graphda_step(state: LearnerState, grad, graph: Graph, head_cfg: ProjectionConfig,
                 tail_cfg: ProjectionConfig, gamma: float, averaged: bool = True):
    """Dual averaging with a head projection of the gradient average and a tail
    projection of the primal point."""
    state.dual_sum += grad
    s_bar = state.dual_sum / (state.t + 1) if averaged else state.dual_sum
    _, b = model_project(s_bar, graph, head_cfg)
    _, state.w = model_project(-(math.sqrt(state.t) / gamma) * b, graph, tail_cfg)
    state.t += 1
    return state


def da_iht_step(state: LearnerState, grad, s: int, gamma: float, averaged: bool = True):
    """:func:`graphda_step` with both projections replaced by exact top-s."""
    state.dual_sum += grad
    s_bar = state.dual_sum / (state.t + 1) if averaged else state.dual_sum
    b = restrict(s_bar, exact_top_s(s_bar, s))
    v = -(math.sqrt(state.t) / gamma) * b
    state.w = restrict(v, exact_top_s(v, s))
    state.t += 1
    return state


def l1_rda_step(state: LearnerState, grad, lam: float, gamma: float, rho: float = 0.0):
    """Enhanced l1 regularized dual averaging; ``rho = 0`` is the basic method."""
    state.dual_sum += grad
    state.t += 1
    t = state.t
    g_bar = state.dual_sum / t
    lam_t = lam + gamma * rho / math.sqrt(t)
    shrunk = np.sign(g_bar) * np.maximum(np.abs(g_bar) - lam_t, 0.0)
    state.w = -(math.sqrt(t) / gamma) * shrunk
    return state


def adagrad_step(state: LearnerState, grad, eta: float, lam: float = 0.0, delta: float = 1.0):
    """Diagonal AdaGrad followed by a per-coordinate soft threshold."""
    sq = state.aux.get("sq_sum")
    if sq is None:
        sq = state.aux["sq_sum"] = np.zeros_like(state.w)
    sq += grad * grad
    h = delta + np.sqrt(sq)
    u = state.w - (eta / h) * grad
    state.w = np.sign(u) * np.maximum(np.abs(u) - eta * lam / h, 0.0)
    state.dual_sum += grad
    state.t += 1
    return state


def adam_step(state: LearnerState, grad, alpha: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, epsilon: float = 1e-8):
    """Bias-corrected Adam; never sparsifies."""
    m = state.aux.get("m")
    if m is None:
        m = state.aux["m"] = np.zeros_like(state.w)
        state.aux["v"] = np.zeros_like(state.w)
    v = state.aux["v"]
    m *= beta1
    m += (1 - beta1) * grad
    v *= beta2
    v += (1 - beta2) * grad * grad
    state.t += 1
    m_hat = m / (1 - beta1 ** state.t)
    v_hat = v / (1 - beta2 ** state.t)
    state.w = state.w - alpha * m_hat / (np.sqrt(v_hat) + epsilon)
    state.dual_sum += grad
    return state


def stoiht_step(state: LearnerState, grad, s: int, gamma: float):
    """Gradient step then hard thresholding to ``s`` entries."""
    u = state.w - gamma * grad
    state.w = restrict(u, exact_top_s(u, s))
    state.dual_sum += grad
    state.t += 1
    return state


def graphstoiht_step(state: LearnerState, grad, graph: Graph, head_cfg: ProjectionConfig,
                     tail_cfg: ProjectionConfig, gamma: float):
    """Gradient step on the head-projected gradient, then a tail projection."""
    _, b = model_project(grad, graph, head_cfg)
    _, state.w = model_project(state.w - gamma * b, graph, tail_cfg)
    state.dual_sum += grad
    state.t += 1
    return state


def make_step(learner: str, hyper: HyperParams, p: int, graph: Graph | None = None):
    """Bind ``hyper`` (and ``graph``) into a ``step(state, grad)`` callable."""
    if learner not in LEARNERS:
        raise ValueError(f"unknown learner {learner!r}; choose from {LEARNERS}")
    h = hyper
    if learner in SPARSITY_LEARNERS:
        if h.sparsity is None:
            raise ValueError(f"{learner} needs a sparsity")
        if h.sparsity > p:
            raise ValueError(f"sparsity {h.sparsity} exceeds dimension {p}")
    if learner in GRAPH_LEARNERS:
        if graph is None:
            raise ValueError(f"{learner} needs a graph")
        if graph.node_count != p:
            raise ValueError(f"graph has {graph.node_count} nodes, data has {p} features")
        head = head_config(p, h.sparsity, h.components, h.omega, h.max_iter, h.head_low)
        tail = tail_config(p, h.sparsity, h.components, h.omega, h.max_iter)
        if learner == "graphda":
            return lambda st, g: graphda_step(st, g, graph, head, tail, h.gamma, h.averaged)
        return lambda st, g: graphstoiht_step(st, g, graph, head, tail, h.gamma)
    if learner == "da-iht":
        return lambda st, g: da_iht_step(st, g, h.sparsity, h.gamma, h.averaged)
    if learner == "stoiht":
        return lambda st, g: stoiht_step(st, g, h.sparsity, h.gamma)
    if learner == "l1-rda":
        return lambda st, g: l1_rda_step(st, g, h.lam, h.gamma, h.rho)
    if learner == "adagrad":
        return lambda st, g: adagrad_step(st, g, h.eta, h.lam, h.delta)
    return lambda st, g: adam_step(st, g, h.alpha, h.beta1, h.beta2, h.epsilon)


def predict_labels(w, X) -> np.ndarray:
    """``sign(<w, x>)`` with ties sent to -1."""
    scores = np.asarray(X, dtype=np.float64) @ np.asarray(w, dtype=np.float64)
    return np.where(scores > 0, 1.0, -1.0)


@dataclass
class Trajectory:
    """Final iterates plus per-step records of a single pass."""

    w: np.ndarray
    w_bar: np.ndarray
    misses: np.ndarray
    misses_bar: np.ndarray
    losses: np.ndarray
    state: LearnerState
    snapshots: dict = field(default_factory=dict)


def run_stream(learner: str, hyper: HyperParams, X, y, loss: str = "logistic",
               graph: Graph | None = None, checkpoints=None,
               state: LearnerState | None = None) -> Trajectory:
    """One ordered pass over ``(X, y)``, one sample per update.

    Miss counts compare the prediction made before each update with the
    label; they are only meaningful for classification. ``snapshots`` maps
    each requested checkpoint ``n`` to ``(w, w_bar)`` after ``n`` samples.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2:
        raise ValueError("X must be two-dimensional")
    if len(X) != len(y):
        raise ValueError(f"X has {len(X)} rows but y has {len(y)} labels")
    p = X.shape[1]
    if state is None:
        state = LearnerState.zeros(p)
    elif len(state.w) != p:
        raise ValueError(f"state has dimension {len(state.w)}, data has {p}")
    loss_grad = get_loss(loss)
    step = make_step(learner, hyper, p, graph)
    n = len(y)
    misses = np.zeros(n, np.int64)
    misses_bar = np.zeros(n, np.int64)
    losses = np.zeros(n)
    miss = miss_bar = 0
    wanted = set(int(c) for c in (checkpoints or ()))
    snapshots = {}
    if 0 in wanted:
        snapshots[0] = (state.w.copy(), state.w_bar)
    for i in range(n):
        x, yi = X[i], y[i]
        pred = 1.0 if x @ state.w > 0 else -1.0
        pred_bar = 1.0 if x @ state.w_bar > 0 else -1.0
        miss += pred != yi
        miss_bar += pred_bar != yi
        misses[i], misses_bar[i] = miss, miss_bar
        losses[i], grad = loss_grad(state.w, x, yi)
        step(state, grad)
        state.running_sum_w += state.w
        if i + 1 in wanted:
            snapshots[i + 1] = (state.w.copy(), state.w_bar)
    return Trajectory(state.w.copy(), state.w_bar, misses, misses_bar, losses, state,
                      snapshots)
