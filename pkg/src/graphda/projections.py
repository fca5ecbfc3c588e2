"""Head and tail projections onto the weighted graph model.

``model_project`` binary-searches a cost multiplier so that the PCST forest
built from prizes ``w**2`` lands strictly inside a target size window.
``exact_top_s`` is the closed-form projection for the complete-graph model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph, restrict
from .pcst import pcst_forest

__all__ = [
    "ProjectionConfig",
    "model_project",
    "head_config",
    "tail_config",
    "head_project",
    "tail_project",
    "exact_top_s",
    "upper_sparsity",
]


@dataclass(frozen=True)
class ProjectionConfig:
    """Size window ``(s_l, s_h)`` and search settings for :func:`model_project`."""

    sparsity_low: int
    sparsity_high: int
    components: int = 1
    max_iter: int = 20
    tolerance: float = 0.1

    def __post_init__(self):
        if self.sparsity_low < 1 or self.sparsity_high < 1:
            raise ValueError("sparsity bounds must be positive")
        if self.sparsity_low > self.sparsity_high:
            raise ValueError("sparsity_low must not exceed sparsity_high")
        if self.components < 1:
            raise ValueError("components must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tolerance >= 0:
            raise ValueError("tolerance must be nonnegative")

    def validate_for(self, graph: Graph) -> None:
        if self.sparsity_high > graph.node_count:
            raise ValueError(
                f"sparsity_high {self.sparsity_high} exceeds node count "
                f"{graph.node_count}")


def upper_sparsity(s: int, omega: float, p: int | None = None) -> int:
    """``ceil(s * (1 + omega))`` without float noise, capped at ``p``."""
    # rounding first keeps 10 * 1.1 at 11 instead of 12
    high = math.ceil(round(s * (1.0 + omega), 9))
    return min(high, p) if p is not None else high


def head_config(p: int, s: int, g: int = 1, omega: float = 0.1, max_iter: int = 20,
                low: int | None = None) -> ProjectionConfig:
    """Head window: ``s_l = p // 2`` unless ``low`` is given; ``s`` is unused then."""
    s_low = p // 2 if low is None else int(low)
    s_low = max(1, min(s_low, p))
    return ProjectionConfig(s_low, upper_sparsity(s_low, omega, p), g, max_iter, omega)


def tail_config(p: int, s: int, g: int = 1, omega: float = 0.1,
                max_iter: int = 20) -> ProjectionConfig:
    """Tail window: ``s_l = s``."""
    s = max(1, min(int(s), p))
    return ProjectionConfig(s, upper_sparsity(s, omega, p), g, max_iter, omega)


def _check_vector(w, graph: Graph) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or len(w) != graph.node_count:
        raise ValueError(f"w must have shape ({graph.node_count},), got {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError("w must be finite")
    return w


def model_project(w, graph: Graph, cfg: ProjectionConfig):
    """Return ``(support, restricted w)`` from the cost-multiplier binary search.

    The search stops as soon as the forest has strictly between ``s_l`` and
    ``s_h`` nodes. If ``max_iter`` rounds pass without that, the forest at
    the upper multiplier is returned.
    """
    w = _check_vector(w, graph)
    cfg.validate_for(graph)
    prizes = w * w
    top = float(prizes.max())
    if top <= 0.0:
        return np.empty(0, np.int64), np.zeros_like(w)
    g = cfg.components
    lam_low, lam_high = 0.0, top
    for _ in range(cfg.max_iter):
        lam_mid = (lam_low + lam_high) / 2.0
        forest = pcst_forest(graph, prizes, g, lam_mid)
        size = len(forest)
        if cfg.sparsity_low < size < cfg.sparsity_high:
            return forest.nodes, restrict(w, forest.nodes)
        if size > cfg.sparsity_high:
            lam_low = lam_mid
        else:
            lam_high = lam_mid
    forest = pcst_forest(graph, prizes, g, lam_high)
    return forest.nodes, restrict(w, forest.nodes)


def head_project(w, graph: Graph, s: int, g: int = 1, omega: float = 0.1,
                 max_iter: int = 20, low: int | None = None):
    """Approximate maximizer of captured energy ``||w_S||^2``."""
    cfg = head_config(graph.node_count, s, g, omega, max_iter, low)
    return model_project(w, graph, cfg)


def tail_project(w, graph: Graph, s: int, g: int = 1, omega: float = 0.1,
                 max_iter: int = 20):
    """Approximate minimizer of the residual ``||w - w_S||^2``."""
    cfg = tail_config(graph.node_count, s, g, omega, max_iter)
    return model_project(w, graph, cfg)


def exact_top_s(w, s: int) -> np.ndarray:
    """Indices of the ``s`` largest ``|w_i|``, ties to the lowest index, sorted."""
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if not 1 <= s <= len(w):
        raise ValueError(f"s must be in [1, {len(w)}], got {s}")
    order = np.argsort(-np.abs(w), kind="stable")
    return np.sort(order[:s])
