"""Experiment orchestration: tuning, trial loops, sweeps and CSV emission.

Every random draw flows from ``seed + trial`` through spawned child
sequences, so a trial is reproducible in isolation and results do not
depend on the worker count.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .batch import BATCH_LEARNERS, run_stream_batch
from .datagen import (STRATEGIES, BenchmarkSpec, GroundTruth, gen_classification_set,
                      gen_regression_set, image_mask, load_idx, make_benchmark_truth,
                      make_wstar, synthetic_digit_masks)
from .graph import Graph, build_grid_graph, induced_forest
from .learners import (GRAPH_LEARNERS, LEARNERS, SPARSITY_LEARNERS, HyperParams,
                       Trajectory, run_stream)
from .metrics import (TABLE_COLUMNS, ClassReport, FeatureReport, aggregate_trials,
                      classification_metrics, feature_metrics, format_mean_std)

__all__ = [
    "DEFAULT_GRIDS",
    "EXPERIMENTS",
    "THREADS_ENV",
    "ExperimentConfig",
    "parse_config_text",
    "load_config",
    "config_from_mapping",
    "Split",
    "TrainSplit",
    "ValidationSplit",
    "TestSplit",
    "TrialData",
    "TuneResult",
    "ResultRow",
    "CurvePoint",
    "expand_grid",
    "default_grid",
    "validation_score",
    "tune",
    "tune_prefixes",
    "benchmark_trial_data",
    "mnist_trial_data",
    "digit_image",
    "evaluate_models",
    "run_benchmark_trial",
    "run_benchmark_experiment",
    "run_sparsity_sweep",
    "run_sample_sweep",
    "run_mu_sweep",
    "run_mnist_experiment",
    "run_experiment",
    "rows_to_csv",
    "read_rows_csv",
    "curve_to_csv",
    "summarize_rows",
    "summary_to_csv",
    "format_table",
    "write_snapshot",
    "read_snapshot",
]

THREADS_ENV = "GRAPHDA_THREADS"
EXPERIMENTS = ("benchmark", "sweep-sparsity", "sweep-samples", "sweep-mu", "mnist")

_RDA_LAMBDA = (0.0001, 0.0005, 0.001, 0.005, 0.01, 0.03, 0.05, 0.1, 0.3, 0.5, 1.0, 3.0,
               5.0, 10.0)
_RDA_GAMMA = (1.0, 5.0, 10.0, 50.0, 100.0, 500.0, 1000.0, 5000.0, 10000.0)
_RDA_RHO = (0.0, 0.00001, 0.000005, 0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.5,
            1.0)
_ADAM_ALPHA = (0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.5)
_ADAGRAD_ETA = (0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 50.0,
                100.0, 500.0, 1000.0, 5000.0)
_SPARSITY = (5, 10, 15, 20, 25, 26, 30, 35, 40, 45, 46, 50, 55, 60, 65, 70, 75, 80, 85, 90,
             92, 95, 100, 105, 110, 115, 120, 125, 130, 132, 135, 140, 145, 150)
_MNIST_SPARSITY = tuple(range(30, 101, 2))
# step sizes for the gradient-step learners; the dual averaging gamma grid
# is an inverse step size and does not transfer
_STEP_GAMMA = _ADAM_ALPHA

DEFAULT_GRIDS = {
    "l1-rda": {"lam": _RDA_LAMBDA, "gamma": _RDA_GAMMA, "rho": _RDA_RHO},
    "adagrad": {"lam": _RDA_LAMBDA, "eta": _ADAGRAD_ETA},
    "adam": {"alpha": _ADAM_ALPHA},
    "stoiht": {"sparsity": _SPARSITY, "gamma": _STEP_GAMMA},
    "da-iht": {"sparsity": _SPARSITY, "gamma": _RDA_GAMMA},
    "graphda": {"sparsity": _SPARSITY, "gamma": _RDA_GAMMA},
    "graphstoiht": {"sparsity": _SPARSITY, "gamma": _STEP_GAMMA},
}

_INT_FIELDS = {"sparsity", "components", "max_iter", "head_low"}
_BOOL_FIELDS = {"averaged"}


def default_grid(learner: str, experiment: str = "benchmark") -> dict:
    if learner not in DEFAULT_GRIDS:
        raise ValueError(f"unknown learner {learner!r}; choose from {LEARNERS}")
    grid = dict(DEFAULT_GRIDS[learner])
    if experiment == "mnist" and "sparsity" in grid:
        grid["sparsity"] = _MNIST_SPARSITY
    return grid


def _coerce_param(name: str, value):
    if name not in HyperParams.field_names():
        raise ValueError(f"unknown hyperparameter {name!r}")
    if name in _BOOL_FIELDS:
        if isinstance(value, str):
            return value.strip().lower() in ("1", "true", "yes")
        return bool(value)
    if name in _INT_FIELDS:
        if float(value) != int(float(value)):
            raise ValueError(f"{name} must be an integer, got {value!r}")
        return int(float(value))
    return float(value)


def expand_grid(grid: dict, p: int | None = None) -> list[tuple[tuple, HyperParams]]:
    """Cartesian product in the order the parameters were written.

    Returns ``(params, HyperParams)`` pairs where ``params`` lists the grid
    coordinates. Sparsity values above ``p`` are dropped.
    """
    names = list(grid)
    axes = []
    for name in names:
        vals = [_coerce_param(name, v) for v in grid[name]]
        if name == "sparsity" and p is not None:
            vals = [v for v in vals if v <= p]
        if not vals:
            raise ValueError(f"grid axis {name!r} is empty")
        axes.append(vals)
    out = []
    for combo in itertools.product(*axes):
        params = tuple(zip(names, combo))
        out.append((params, HyperParams(**dict(params))))
    return out


# ---------------------------------------------------------------- config

@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "benchmark"
    learners: tuple = ("graphda", "da-iht", "l1-rda", "adagrad", "adam", "stoiht",
                       "graphstoiht")
    grids: dict = field(default_factory=dict)
    trials: int = 20
    seed: int = 0
    rows: int = 33
    cols: int = 33
    subgraph_size: int = 26
    mu: float = 0.3
    n_train: int = 400
    n_validate: int = 400
    n_test: int = 400
    criterion: str = "accuracy"
    sweep_values: tuple = ()
    strategy: str = "constant"
    digits: tuple = (0, 4, 5)
    idx_images: str = ""
    idx_labels: str = ""
    threshold: float = 0.0
    threads: int = 1
    out: str = ""
    snapshots: str = ""

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if not self.learners:
            raise ValueError("learner list is empty")
        for name in self.learners:
            if name not in LEARNERS:
                raise ValueError(f"unknown learner {name!r}; choose from {LEARNERS}")
        for name in self.grids:
            if name not in LEARNERS:
                raise ValueError(f"grid given for unknown learner {name!r}")
        for name in self.learners:
            grid = self.grid_for(name)
            if not grid or any(len(v) == 0 for v in grid.values()):
                raise ValueError(f"grid for {name} is empty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.criterion not in ("accuracy", "mse"):
            raise ValueError("criterion must be 'accuracy' or 'mse'")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if self.experiment != "benchmark" and not self.sweep_values:
            raise ValueError(f"{self.experiment} needs sweep_values")
        self.benchmark_spec()  # validates sizes

    def grid_for(self, learner: str) -> dict:
        if learner in self.grids:
            return dict(self.grids[learner])
        return default_grid(learner, self.experiment)

    def benchmark_spec(self, **changes) -> BenchmarkSpec:
        base = dict(rows=self.rows, cols=self.cols, subgraph_size=self.subgraph_size,
                    mu=self.mu, n_train=self.n_train, n_validate=self.n_validate,
                    n_test=self.n_test, seed=self.seed)
        base.update(changes)
        return BenchmarkSpec(**base)

    def updated(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


_TUPLE_KEYS = {"learners": str, "sweep_values": float, "digits": int}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    ``grid.<learner>.<param> = v1, v2`` lines build per-learner grids, kept
    in written order. Returns a flat dict with a ``grids`` entry.
    """
    out: dict = {}
    grids: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"config line {lineno}: empty key")
        if key.startswith("grid."):
            parts = key.split(".")
            if len(parts) != 3:
                raise ValueError(f"config line {lineno}: grid keys look like grid.<learner>.<param>")
            _, learner, param = parts
            vals = [v.strip() for v in value.split(",") if v.strip()]
            if not vals:
                raise ValueError(f"config line {lineno}: empty grid for {learner}.{param}")
            grids.setdefault(learner, {})[param] = tuple(vals)
        else:
            if key in out:
                raise ValueError(f"config line {lineno}: duplicate key {key!r}")
            out[key] = value
    if grids:
        out["grids"] = grids
    return out


def config_from_mapping(values: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Build a config from string or typed values layered over ``base``."""
    known = {f.name: f for f in fields(ExperimentConfig)}
    changes = {}
    for key, value in values.items():
        if key not in known:
            raise ValueError(f"unknown config key {key!r}")
        if key == "grids":
            changes[key] = {name: dict(g) for name, g in value.items()}
        elif key in _TUPLE_KEYS:
            if isinstance(value, str):
                value = [v.strip() for v in value.split(",") if v.strip()]
            changes[key] = tuple(_TUPLE_KEYS[key](v) for v in value)
        elif key in ("trials", "seed", "rows", "cols", "subgraph_size", "n_train",
                     "n_validate", "n_test", "threads"):
            changes[key] = int(value)
        elif key in ("mu", "threshold"):
            changes[key] = float(value)
        else:
            changes[key] = str(value)
    return replace(base or ExperimentConfig(), **changes)


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Read a config file; its keys win over ``overrides`` (usually CLI flags)."""
    text = Path(path).read_text()
    values = dict(overrides or {})
    values.update(parse_config_text(text))
    return config_from_mapping(values)


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(n, 1)


# ---------------------------------------------------------------- splits

@dataclass(frozen=True, eq=False)
class Split:
    """A data split that records every read along with its purpose."""

    X: np.ndarray
    y: np.ndarray
    access_log: list = field(default_factory=list, repr=False)

    role = "split"

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if X.ndim != 2 or len(X) != len(y):
            raise ValueError(f"{self.role} split needs (n, p) features and n targets")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def read(self, purpose: str):
        self.access_log.append(purpose)
        return self.X, self.y

    def __len__(self):
        return len(self.y)


class TrainSplit(Split):
    role = "train"


class ValidationSplit(Split):
    role = "validation"


class TestSplit(Split):
    role = "test"
    __test__ = False  # not a pytest class


def _require(split, cls, name):
    if type(split) is not cls:
        raise TypeError(f"{name} must be a {cls.__name__}, got {type(split).__name__}")


@dataclass(frozen=True)
class TrialData:
    graph: Graph
    truth: GroundTruth
    train: TrainSplit
    validation: ValidationSplit
    test: TestSplit
    seed: int
    loss: str


def _trial_streams(seed: int):
    """Independent generators for truth, train, validation and test."""
    truth, train, val, test = np.random.SeedSequence(seed).spawn(4)
    return truth, np.random.default_rng(train), np.random.default_rng(val), \
        np.random.default_rng(test)


def benchmark_trial_data(spec: BenchmarkSpec, trial: int, graph: Graph | None = None,
                         n_train: int | None = None) -> TrialData:
    graph = graph or spec.graph()
    seed = spec.seed + trial
    truth_seq, r_train, r_val, r_test = _trial_streams(seed)
    # the support shape does not depend on mu, so sweeps over mu are paired
    support = make_benchmark_truth(graph, spec.subgraph_size, 1.0, truth_seq).support
    wstar = np.zeros(graph.node_count)
    wstar[support] = spec.mu
    truth = GroundTruth(wstar, support if spec.mu != 0 else np.empty(0, np.int64))
    p = graph.node_count
    n = spec.n_train if n_train is None else n_train
    split = lambda cls, m, rng: cls(*gen_classification_set(support, p, spec.mu, m, rng))
    return TrialData(graph, truth, split(TrainSplit, n, r_train),
                     split(ValidationSplit, spec.n_validate, r_val),
                     split(TestSplit, spec.n_test, r_test), seed, "logistic")


def digit_image(cfg: ExperimentConfig, digit: int):
    """``(mask, intensities, side)`` for ``digit`` from IDX files or the
    bundled synthetic masks."""
    if cfg.idx_images:
        images = load_idx(cfg.idx_images)
        if images.ndim != 3:
            raise ValueError(f"{cfg.idx_images}: expected an image file")
        if not cfg.idx_labels:
            raise ValueError("idx_labels is required with idx_images")
        labels = load_idx(cfg.idx_labels)
        if labels.ndim != 1 or len(labels) != len(images):
            raise ValueError("label file does not match the image file")
        side = images.shape[1]
        if images.shape[2] != side:
            raise ValueError("images must be square")
        graph = build_grid_graph(side, side)
        best = None
        for k in np.flatnonzero(labels == digit):
            mask = image_mask(images[k], cfg.threshold)
            if len(mask) == 0 or (best is not None and len(mask) >= len(best[0])):
                continue
            if induced_forest(mask, graph)[0] == 1:
                best = (mask, images[k].reshape(-1)[mask].astype(np.float64))
        if best is None:
            raise ValueError(f"no image of digit {digit} has a connected mask")
        return best[0], best[1], side
    masks = synthetic_digit_masks(28)
    if digit not in masks:
        raise ValueError(f"no synthetic mask for digit {digit}; have {sorted(masks)}")
    mask, vals = masks[digit]
    return mask, vals, 28


def mnist_trial_data(cfg: ExperimentConfig, digit: int, trial: int, n_train: int,
                     graph: Graph | None = None) -> TrialData:
    mask, vals, side = digit_image(cfg, digit)
    graph = graph or build_grid_graph(side, side)
    p = graph.node_count
    seed = cfg.seed + trial
    truth_seq, r_train, r_val, r_test = _trial_streams(seed)
    truth = make_wstar(cfg.strategy, mask, p, vals, np.random.default_rng(truth_seq))
    split = lambda cls, m, rng: cls(*gen_regression_set(truth.wstar, m, rng))
    return TrialData(graph, truth, split(TrainSplit, n_train, r_train),
                     split(ValidationSplit, cfg.n_validate, r_val),
                     split(TestSplit, cfg.n_test, r_test), seed, "least_squares")


# ---------------------------------------------------------------- tuning

def validation_score(w, X, y, criterion: str) -> float:
    """Validation accuracy, or negative mean squared error; NaN maps to -inf."""
    if criterion not in ("accuracy", "mse"):
        raise ValueError(f"unknown criterion {criterion!r}")
    # diverged grid points overflow here; they score -inf below
    with np.errstate(over="ignore", invalid="ignore"):
        scores = X @ np.asarray(w, dtype=np.float64)
        if criterion == "accuracy":
            val = float(np.mean(np.where(scores > 0, 1.0, -1.0) == y)) if len(y) else 0.0
        else:
            val = -float(np.mean((scores - y) ** 2)) if len(y) else 0.0
    return val if math.isfinite(val) else -math.inf


@dataclass
class TuneResult:
    index: int
    params: tuple
    hyper: HyperParams
    score: float
    scores: list
    w: np.ndarray
    w_bar: np.ndarray
    trajectory: Trajectory | None = None


def tune(learner: str, grid, train: TrainSplit, validation: ValidationSplit,
         criterion: str = "accuracy", loss: str = "logistic",
         graph: Graph | None = None) -> TuneResult:
    """One full pass per grid point; keep the best validation score.

    ``grid`` is a dict of axes or a list from :func:`expand_grid`. Ties go
    to the earliest point. Only train and validation splits are accepted.
    """
    _require(train, TrainSplit, "train")
    _require(validation, ValidationSplit, "validation")
    X, y = train.read("tune")
    Xv, yv = validation.read("tune")
    points = expand_grid(grid, X.shape[1]) if isinstance(grid, dict) else list(grid)
    if not points:
        raise ValueError("empty grid")
    hypers = [h for _, h in points]
    scores = []
    best = None
    if learner in GRAPH_LEARNERS:
        for k, h in enumerate(hypers):
            traj = run_stream(learner, h, X, y, loss, graph)
            sc = validation_score(traj.w, Xv, yv, criterion)
            scores.append(sc)
            if best is None or sc > best[1]:
                best = (k, sc, traj.w, traj.w_bar, traj)
    else:
        W, W_bar, _ = run_stream_batch(learner, hypers, X, y, loss, graph)
        for k in range(len(hypers)):
            sc = validation_score(W[k], Xv, yv, criterion)
            scores.append(sc)
            if best is None or sc > best[1]:
                best = (k, sc, W[k].copy(), W_bar[k].copy(), None)
    k, sc, w, w_bar, traj = best
    return TuneResult(k, points[k][0], hypers[k], sc, scores, w, w_bar, traj)


def tune_prefixes(learner: str, grid, train: TrainSplit, validation: ValidationSplit,
                  ns, criterion: str = "accuracy", loss: str = "logistic",
                  graph: Graph | None = None) -> dict:
    """Tune separately for each prefix length ``n`` of the training stream.

    The learners are online, so one pass with checkpoints gives exactly the
    model a fresh run on the first ``n`` samples would produce.
    """
    _require(train, TrainSplit, "train")
    _require(validation, ValidationSplit, "validation")
    X, y = train.read("tune")
    Xv, yv = validation.read("tune")
    ns = sorted(set(int(n) for n in ns))
    if not ns or ns[0] < 0 or ns[-1] > len(y):
        raise ValueError(f"prefix lengths must lie in [0, {len(y)}]")
    points = expand_grid(grid, X.shape[1]) if isinstance(grid, dict) else list(grid)
    if not points:
        raise ValueError("empty grid")
    hypers = [h for _, h in points]
    _, _, snaps = run_stream_batch(learner, hypers, X, y, loss, graph, checkpoints=ns)
    out = {}
    for n in ns:
        W, W_bar = snaps[n]
        scores = [validation_score(W[k], Xv, yv, criterion) for k in range(len(hypers))]
        k = int(np.argmax(scores))  # first maximum
        out[n] = TuneResult(k, points[k][0], hypers[k], scores[k], scores, W[k].copy(),
                            W_bar[k].copy())
    return out


# ---------------------------------------------------------------- results

@dataclass(frozen=True)
class ResultRow:
    """One (method, trial) outcome; feature metrics refer to ``w_T``."""

    method: str
    trial: int
    seed: int
    params: tuple
    feature_wt: FeatureReport
    feature_wbar: FeatureReport
    class_wt: ClassReport
    class_wbar: ClassReport
    online_miss_wt: int
    online_miss_wbar: int
    seconds: float = 0.0

    def table_values(self) -> dict:
        return {
            "pre": self.feature_wt.precision,
            "rec": self.feature_wt.recall,
            "f1": self.feature_wt.f1,
            "auc_wt": self.class_wt.auc,
            "auc_wbar": self.class_wbar.auc,
            "acc_wt": self.class_wt.accuracy,
            "acc_wbar": self.class_wbar.accuracy,
            "miss_wt": self.online_miss_wt,
            "miss_wbar": self.online_miss_wbar,
            "nr_wt": self.feature_wt.nonzero_ratio,
            "nr_wbar": self.feature_wbar.nonzero_ratio,
        }


def _format_params(params) -> str:
    return ";".join(f"{k}={v!r}" for k, v in params)


def _parse_params(text: str) -> tuple:
    if not text:
        return ()
    out = []
    for item in text.split(";"):
        k, v = item.split("=", 1)
        out.append((k, _coerce_param(k, v)))
    return tuple(out)


def evaluate_models(w, w_bar, truth: GroundTruth, test: TestSplit):
    """Feature and test-set reports for ``w_T`` and ``w_bar_T``."""
    _require(test, TestSplit, "test")
    Xt, yt = test.read("evaluate")
    return (feature_metrics(w, truth.wstar), feature_metrics(w_bar, truth.wstar),
            classification_metrics(Xt @ w, yt), classification_metrics(Xt @ w_bar, yt))


def write_snapshot(path, w, t: int) -> None:
    """Header ``p <dim> t <step>`` then one value per line."""
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    with open(path, "w") as fh:
        fh.write(f"p {len(w)} t {int(t)}\n")
        fh.writelines(f"{v!r}\n" for v in w.tolist())


def read_snapshot(path):
    """Returns ``(w, t)`` from a file written by :func:`write_snapshot`."""
    lines = Path(path).read_text().split("\n")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "p" or head[2] != "t":
        raise ValueError(f"{path}: header must read 'p <dim> t <step>'")
    p, t = int(head[1]), int(head[3])
    vals = [float(v) for v in lines[1:] if v.strip()]
    if len(vals) != p:
        raise ValueError(f"{path}: header says {p} values, found {len(vals)}")
    return np.array(vals), t


def snapshot_paths(directory, method: str, trial: int):
    d = Path(directory)
    return d / f"{method}_trial{trial}_w.txt", d / f"{method}_trial{trial}_wbar.txt"


def run_benchmark_trial(cfg: ExperimentConfig, learner: str, trial: int,
                        data: TrialData | None = None) -> ResultRow:
    data = data or benchmark_trial_data(cfg.benchmark_spec(), trial)
    start = time.perf_counter()
    res = tune(learner, cfg.grid_for(learner), data.train, data.validation, cfg.criterion,
               data.loss, data.graph)
    traj = res.trajectory
    if traj is None:
        X, y = data.train.read("train")
        traj = run_stream(learner, res.hyper, X, y, data.loss, data.graph)
    fw, fb, cw, cb = evaluate_models(traj.w, traj.w_bar, data.truth, data.test)
    elapsed = time.perf_counter() - start
    if cfg.snapshots:
        Path(cfg.snapshots).mkdir(parents=True, exist_ok=True)
        pw, pb = snapshot_paths(cfg.snapshots, learner, trial)
        write_snapshot(pw, traj.w, len(data.train))
        write_snapshot(pb, traj.w_bar, len(data.train))
    n = len(data.train)
    return ResultRow(learner, trial, data.seed, res.params, fw, fb, cw, cb,
                     int(traj.misses[-1]) if n else 0,
                     int(traj.misses_bar[-1]) if n else 0, elapsed)


def _benchmark_unit(args):
    cfg, trial, learners = args
    data = benchmark_trial_data(cfg.benchmark_spec(), trial)
    return [run_benchmark_trial(cfg, name, trial, data) for name in learners]


def _fan_out(func, units, threads: int):
    if threads <= 1 or len(units) <= 1:
        return [func(u) for u in units]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, units))


def run_benchmark_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    """Tune, train and evaluate every learner on every trial."""
    units = [(cfg, trial, cfg.learners) for trial in range(cfg.trials)]
    rows = [r for chunk in _fan_out(_benchmark_unit, units, cfg.threads) for r in chunk]
    order = {name: k for k, name in enumerate(cfg.learners)}
    return sorted(rows, key=lambda r: (r.trial, order[r.method]))


@dataclass(frozen=True)
class CurvePoint:
    sweep: str
    x: float
    method: str
    metric: str
    mean: float
    std: float
    count: int


def _curve(sweep, x, method, metric, values) -> CurvePoint:
    vals = np.asarray(values, dtype=np.float64)
    return CurvePoint(sweep, float(x), method, metric, float(vals.mean()), float(vals.std()),
                      len(vals))


def _sparsity_learners(cfg):
    names = tuple(n for n in cfg.learners if n in SPARSITY_LEARNERS)
    if not names:
        raise ValueError("the sparsity sweep needs at least one sparsity learner")
    return names


def run_sparsity_sweep(cfg: ExperimentConfig, s_values=None) -> list[CurvePoint]:
    """Test error ``1 - Acc`` of ``w_T`` and ``w_bar_T`` with the sparsity held
    fixed at each value; other hyperparameters are tuned as usual."""
    s_values = [int(s) for s in (s_values if s_values is not None else cfg.sweep_values)]
    learners = _sparsity_learners(cfg)
    out = []
    for s in s_values:
        grids = {name: {**cfg.grid_for(name), "sparsity": (s,)} for name in learners}
        rows = run_benchmark_experiment(cfg.updated(learners=learners, grids=grids))
        for name in learners:
            mine = [r for r in rows if r.method == name]
            out.append(_curve("sparsity", s, name, "error_wt",
                              [1 - r.class_wt.accuracy for r in mine]))
            out.append(_curve("sparsity", s, name, "error_wbar",
                              [1 - r.class_wbar.accuracy for r in mine]))
    return out


def run_mu_sweep(cfg: ExperimentConfig, mus=None) -> list[CurvePoint]:
    mus = [float(m) for m in (mus if mus is not None else cfg.sweep_values)]
    out = []
    for mu in mus:
        rows = run_benchmark_experiment(cfg.updated(mu=mu))
        for name in cfg.learners:
            mine = [r for r in rows if r.method == name]
            out.append(_curve("mu", mu, name, "acc_wt", [r.class_wt.accuracy for r in mine]))
            out.append(_curve("mu", mu, name, "acc_wbar",
                              [r.class_wbar.accuracy for r in mine]))
    return out


def _prefix_unit(args):
    """Per-prefix test metrics for one trial; returns ``{(method, n): values}``."""
    kind, cfg, trial, digit, ns = args
    n_max = max(ns)
    if kind == "samples":
        data = benchmark_trial_data(cfg.benchmark_spec(), trial, n_train=n_max)
    else:
        data = mnist_trial_data(cfg, digit, trial, n_max)
    out = {}
    for name in cfg.learners:
        tuned = tune_prefixes(name, cfg.grid_for(name), data.train, data.validation, ns,
                              cfg.criterion, data.loss, data.graph)
        for n, res in tuned.items():
            fw, fb, cw, cb = _evaluate_prefix(res, data)
            out[(name, n)] = (fw.f1, fb.f1, cw, cb)
    return out


def _evaluate_prefix(res: TuneResult, data: TrialData):
    fw = feature_metrics(res.w, data.truth.wstar)
    fb = feature_metrics(res.w_bar, data.truth.wstar)
    Xt, yt = data.test.read("evaluate")
    if data.loss == "logistic":
        return fw, fb, classification_metrics(Xt @ res.w, yt), \
            classification_metrics(Xt @ res.w_bar, yt)
    mse = lambda w: float(np.mean((Xt @ w - yt) ** 2))
    return fw, fb, mse(res.w), mse(res.w_bar)


def run_sample_sweep(cfg: ExperimentConfig, t_values=None) -> list[CurvePoint]:
    """Test accuracy versus the number of training samples, tuned per size."""
    ns = [int(t) for t in (t_values if t_values is not None else cfg.sweep_values)]
    units = [("samples", cfg, trial, None, ns) for trial in range(cfg.trials)]
    results = _fan_out(_prefix_unit, units, cfg.threads)
    out = []
    for n in sorted(set(ns)):
        for name in cfg.learners:
            vals = [r[(name, n)] for r in results]
            out.append(_curve("samples", n, name, "acc_wt", [v[2].accuracy for v in vals]))
            out.append(_curve("samples", n, name, "acc_wbar", [v[3].accuracy for v in vals]))
    return out


def run_mnist_experiment(cfg: ExperimentConfig, strategy: str | None = None,
                         n_values=None) -> list[CurvePoint]:
    """Feature F1 of ``w_T`` versus training size for regression streams,
    averaged over digits and trials and tuned on validation squared error."""
    if strategy is not None:
        cfg = cfg.updated(strategy=strategy)
    cfg = cfg.updated(criterion="mse")
    ns = [int(n) for n in (n_values if n_values is not None else cfg.sweep_values)]
    units = [("mnist", cfg, trial, digit, ns)
             for digit in cfg.digits for trial in range(cfg.trials)]
    results = _fan_out(_prefix_unit, units, cfg.threads)
    out = []
    for n in sorted(set(ns)):
        for name in cfg.learners:
            vals = [r[(name, n)] for r in results]
            out.append(_curve(f"mnist-{cfg.strategy}", n, name, "f1_wt", [v[0] for v in vals]))
            out.append(_curve(f"mnist-{cfg.strategy}", n, name, "f1_wbar",
                              [v[1] for v in vals]))
    return out


def run_experiment(cfg: ExperimentConfig):
    """Dispatch on ``cfg.experiment``; returns rows or curve points."""
    if cfg.experiment == "benchmark":
        return run_benchmark_experiment(cfg)
    if cfg.experiment == "sweep-sparsity":
        return run_sparsity_sweep(cfg)
    if cfg.experiment == "sweep-samples":
        return run_sample_sweep(cfg)
    if cfg.experiment == "sweep-mu":
        return run_mu_sweep(cfg)
    return run_mnist_experiment(cfg)


# ---------------------------------------------------------------- CSV

ROW_COLUMNS = ("method", "trial", "seed", "params") + TABLE_COLUMNS + (
    "test_miss_wt", "test_miss_wbar")
CURVE_COLUMNS = ("sweep", "x", "method", "metric", "mean", "std", "count")
SUMMARY_COLUMNS = ("method", "trials") + tuple(
    f"{c}_{k}" for c in TABLE_COLUMNS for k in ("mean", "std"))


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def rows_to_csv(rows, path=None) -> str:
    """Per-(method, trial) CSV. Wall-clock time is left out so equal seeds
    give byte-identical files."""
    body = []
    for r in rows:
        vals = r.table_values()
        body.append([r.method, r.trial, r.seed, _format_params(r.params)]
                    + [vals[c] for c in TABLE_COLUMNS]
                    + [r.class_wt.miss, r.class_wbar.miss])
    text = _csv_text(ROW_COLUMNS, body)
    if path:
        Path(path).write_text(text)
    return text


def read_rows_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != ROW_COLUMNS:
            raise ValueError(f"{path}: not a result-row CSV")
        out = []
        for rec in reader:
            row = {"method": rec["method"], "trial": int(rec["trial"]),
                   "seed": int(rec["seed"]), "params": _parse_params(rec["params"])}
            for c in TABLE_COLUMNS + ("test_miss_wt", "test_miss_wbar"):
                row[c] = float(rec[c])
            out.append(row)
        return out


def curve_to_csv(points, path=None) -> str:
    text = _csv_text(CURVE_COLUMNS, [[getattr(p, c) for c in CURVE_COLUMNS] for p in points])
    if path:
        Path(path).write_text(text)
    return text


def summarize_rows(rows) -> list[tuple[str, int, dict]]:
    """``(method, trials, {column: (mean, std)})`` per method in first-seen order."""
    dicts = [r.table_values() if isinstance(r, ResultRow) else r for r in rows]
    methods = list(dict.fromkeys((r.method if isinstance(r, ResultRow) else r["method"])
                                 for r in rows))
    out = []
    for m in methods:
        mine = [d for d, r in zip(dicts, rows)
                if (r.method if isinstance(r, ResultRow) else r["method"]) == m]
        stats = aggregate_trials([{c: d[c] for c in TABLE_COLUMNS} for d in mine])
        out.append((m, len(mine), stats))
    return out


def summary_to_csv(summary, path=None) -> str:
    body = [[m, n] + [stats[c][k] for c in TABLE_COLUMNS for k in (0, 1)]
            for m, n, stats in summary]
    text = _csv_text(SUMMARY_COLUMNS, body)
    if path:
        Path(path).write_text(text)
    return text


def format_table(summary) -> str:
    """Fixed-width text table with ``mean±std`` cells."""
    head = ["method", "pre", "rec", "f1", "auc(wt, wbar)", "acc(wt, wbar)",
            "miss(wt, wbar)", "nr(wt, wbar)"]
    lines = []
    for m, _, st in summary:
        cell = lambda c, d=3: format_mean_std(*st[c], digits=d)
        pct = lambda c: f"{100 * st[c][0]:.1f}%"
        lines.append([m, cell("pre"), cell("rec"), cell("f1"),
                      f"({cell('auc_wt')}, {cell('auc_wbar')})",
                      f"({cell('acc_wt')}, {cell('acc_wbar')})",
                      f"({cell('miss_wt', 1)}, {cell('miss_wbar', 1)})",
                      f"({pct('nr_wt')}, {pct('nr_wbar')})"])
    widths = [max(len(str(r[k])) for r in [head] + lines) for k in range(len(head))]
    fmt = lambda r: "  ".join(str(v).ljust(w) for v, w in zip(r, widths)).rstrip()
    return "\n".join([fmt(head)] + [fmt(r) for r in lines])
