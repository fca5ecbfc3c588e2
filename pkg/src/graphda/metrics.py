"""Feature-level and classification metrics plus trial aggregation."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

__all__ = [
    "FeatureReport",
    "ClassReport",
    "feature_metrics",
    "classification_metrics",
    "auc_score",
    "UndefinedAucError",
    "aggregate_trials",
    "format_mean_std",
    "TABLE_COLUMNS",
]


@dataclass(frozen=True)
class FeatureReport:
    precision: float
    recall: float
    f1: float
    nonzero_ratio: float


@dataclass(frozen=True)
class ClassReport:
    accuracy: float
    miss: int
    auc: float


class UndefinedAucError(ValueError):
    """AUC requested on a single-class label set."""

    def __init__(self, report: ClassReport):
        super().__init__("AUC is undefined with a single class; accuracy and miss are in .report")
        self.report = report


def feature_metrics(w, wstar, tolerance: float = 0.0) -> FeatureReport:
    """Support overlap between a learned model and the truth.

    An empty learned support scores 0 on every field.
    """
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    wstar = np.asarray(wstar, dtype=np.float64).reshape(-1)
    if len(w) != len(wstar):
        raise ValueError(f"length mismatch: {len(w)} vs {len(wstar)}")
    if tolerance < 0:
        raise ValueError("tolerance must be nonnegative")
    a = np.abs(wstar) > tolerance
    b = np.abs(w) > tolerance
    na, nb = int(a.sum()), int(b.sum())
    if nb == 0:
        return FeatureReport(0.0, 0.0, 0.0, 0.0)
    both = int((a & b).sum())
    recall = both / na if na else 0.0
    return FeatureReport(both / nb, recall, 2.0 * both / (na + nb), nb / len(w))


def auc_score(scores, labels) -> float:
    """Mann-Whitney AUC with midranks for tied scores."""
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    pos = np.asarray(labels).reshape(-1) > 0
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes")
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def classification_metrics(scores, labels) -> ClassReport:
    """Accuracy and misses under ``sign(score)`` with ``sign(0) = -1``, plus AUC.

    With a single class present AUC is undefined: :class:`UndefinedAucError`
    is raised and carries the report (AUC set to NaN) in ``.report``.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels, dtype=np.float64).reshape(-1)
    if len(scores) != len(labels):
        raise ValueError(f"length mismatch: {len(scores)} vs {len(labels)}")
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    pred = np.where(scores > 0, 1.0, -1.0)
    miss = int((pred != labels).sum())
    n = len(labels)
    acc = (n - miss) / n if n else 0.0
    if len(np.unique(labels)) < 2:
        raise UndefinedAucError(ClassReport(acc, miss, float("nan")))
    return ClassReport(acc, miss, auc_score(scores, labels))


def aggregate_trials(reports, field_names=None) -> dict:
    """Per-field ``(mean, population std)`` over a list of reports or dicts."""
    reports = list(reports)
    if not reports:
        raise ValueError("cannot aggregate an empty list")
    rows = [asdict(r) if hasattr(r, "__dataclass_fields__") else dict(r) for r in reports]
    names = field_names or list(rows[0])
    out = {}
    for name in names:
        vals = np.array([row[name] for row in rows], dtype=np.float64)
        # centring on the first value makes identical reports give std exactly 0
        out[name] = (float(vals.mean()), float((vals - vals[0]).std()))
    return out


def format_mean_std(mean: float, std: float, digits: int = 3) -> str:
    return f"{mean:.{digits}f}±{std:.{digits}f}"


# per-method CSV column order: feature block, then (w_t, w_bar_t) pairs
TABLE_COLUMNS = (
    "pre", "rec", "f1",
    "auc_wt", "auc_wbar",
    "acc_wt", "acc_wbar",
    "miss_wt", "miss_wbar",
    "nr_wt", "nr_wbar",
)
