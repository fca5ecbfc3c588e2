"""Synthetic benchmark streams, regression ground truths and IDX ingestion."""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import Graph, as_support, build_grid_graph

__all__ = [
    "BenchmarkSpec",
    "GroundTruth",
    "STRATEGIES",
    "BENCHMARK_SIZES",
    "gen_connected_subgraph",
    "gen_classification_sample",
    "gen_classification_set",
    "make_benchmark_truth",
    "make_wstar",
    "gen_regression_sample",
    "gen_regression_set",
    "IdxError",
    "load_idx",
    "image_mask",
    "synthetic_digit_masks",
    "write_dataset_csv",
    "read_dataset_csv",
    "write_truth",
]

BENCHMARK_SIZES = (26, 46, 92, 132)
STRATEGIES = ("normalized", "constant", "gaussian")


@dataclass(frozen=True)
class BenchmarkSpec:
    rows: int = 33
    cols: int = 33
    subgraph_size: int = 26
    mu: float = 0.3
    n_train: int = 400
    n_validate: int = 400
    n_test: int = 400
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be >= 1")
        if not 1 <= self.subgraph_size <= self.rows * self.cols:
            raise ValueError("subgraph_size must lie in [1, rows * cols]")
        if min(self.n_train, self.n_validate, self.n_test) < 0:
            raise ValueError("sample counts must be nonnegative")

    def graph(self) -> Graph:
        return build_grid_graph(self.rows, self.cols)


@dataclass(frozen=True)
class GroundTruth:
    wstar: np.ndarray
    support: np.ndarray

    def __post_init__(self):
        wstar = np.asarray(self.wstar, dtype=np.float64)
        support = as_support(self.support, len(wstar))
        if not np.array_equal(np.flatnonzero(wstar), support):
            raise ValueError("support must equal the nonzero pattern of wstar")
        object.__setattr__(self, "wstar", wstar)
        object.__setattr__(self, "support", support)


def gen_connected_subgraph(graph: Graph, size: int, seed) -> np.ndarray:
    """Connected node set of exactly ``size`` nodes, grown from a random start.

    Each round picks a uniformly random frontier node, so the shape is a
    randomized breadth-first blob. Deterministic given ``seed``.
    """
    p = graph.node_count
    if not 1 <= size <= p:
        raise ValueError(f"size must lie in [1, {p}], got {size}")
    rng = np.random.default_rng(seed)
    adj = graph.adjacency
    for _ in range(64):
        start = int(rng.integers(p))
        chosen = {start}
        frontier = sorted({v for v, _ in adj[start]})
        while len(chosen) < size and frontier:
            node = frontier.pop(int(rng.integers(len(frontier))))
            chosen.add(node)
            fresh = {v for v, _ in adj[node]} - chosen - set(frontier)
            frontier.extend(sorted(fresh))
        if len(chosen) == size:
            return np.array(sorted(chosen), dtype=np.int64)
    raise ValueError(f"no connected component holds {size} nodes")


def make_benchmark_truth(graph: Graph, size: int, mu: float, seed) -> GroundTruth:
    """``wstar = mu`` on a random connected support of ``size`` nodes."""
    support = gen_connected_subgraph(graph, size, seed)
    wstar = np.zeros(graph.node_count)
    if mu != 0:
        wstar[support] = mu
        return GroundTruth(wstar, support)
    return GroundTruth(wstar, np.empty(0, np.int64))


def gen_classification_sample(support, p: int, mu: float, y: int, rng) -> np.ndarray:
    """Features for label ``y``: N(0, 1) everywhere, shifted by ``mu`` on the
    support when ``y = +1``."""
    if y not in (-1, 1):
        raise ValueError(f"label must be -1 or +1, got {y}")
    x = rng.standard_normal(p)
    if y == 1:
        x[np.asarray(support, dtype=np.int64)] += mu
    return x


def gen_classification_set(support, p: int, mu: float, n: int, rng):
    """``n`` samples with balanced labels in random order."""
    y = np.where(np.arange(n) < n // 2, -1, 1)
    y = rng.permutation(y)
    X = np.empty((n, p))
    for i in range(n):
        X[i] = gen_classification_sample(support, p, mu, int(y[i]), rng)
    return X, y.astype(np.float64)


def make_wstar(strategy: str, mask, p: int, intensities=None, rng=None) -> GroundTruth:
    """Regression ground truth on ``mask`` for one of :data:`STRATEGIES`."""
    mask = as_support(mask, p)
    wstar = np.zeros(p)
    if strategy == "constant":
        wstar[mask] = 1.0
    elif strategy == "normalized":
        if intensities is None:
            raise ValueError("the normalized strategy needs pixel intensities")
        vals = np.asarray(intensities, dtype=np.float64).reshape(-1)
        vals = vals[mask] if len(vals) == p else vals
        if len(vals) != len(mask):
            raise ValueError("intensities must cover the mask")
        top = vals.max() if len(vals) else 0.0
        if top <= 0:
            raise ValueError("intensities on the mask must have a positive maximum")
        wstar[mask] = vals / top
    elif strategy == "gaussian":
        if rng is None:
            raise ValueError("the gaussian strategy needs an rng")
        wstar[mask] = rng.standard_normal(len(mask))
    else:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    return GroundTruth(wstar, np.flatnonzero(wstar))


def gen_regression_sample(wstar, rng):
    """``x ~ N(0, I)`` and the noiseless response ``y = <x, wstar>``."""
    wstar = np.asarray(wstar, dtype=np.float64)
    x = rng.standard_normal(len(wstar))
    return x, float(x @ wstar)


def gen_regression_set(wstar, n: int, rng):
    wstar = np.asarray(wstar, dtype=np.float64)
    X = rng.standard_normal((n, len(wstar)))
    return X, X @ wstar


class IdxError(ValueError):
    """Malformed IDX file; the message names the byte offset."""


_IDX_IMAGES = 0x00000803
_IDX_LABELS = 0x00000801


def load_idx(path):
    """Decode an IDX image file into an ``(n, rows, cols)`` uint8 array, or a
    label file into an ``(n,)`` uint8 array."""
    data = Path(path).read_bytes()
    if len(data) < 4:
        raise IdxError(f"byte 0: need a 4-byte magic number, file has {len(data)} bytes")
    (magic,) = struct.unpack(">I", data[:4])
    if magic == _IDX_IMAGES:
        ndim = 3
    elif magic == _IDX_LABELS:
        ndim = 1
    else:
        raise IdxError(f"byte 0: bad magic number 0x{magic:08x}")
    header = 4 + 4 * ndim
    if len(data) < header:
        raise IdxError(f"byte 4: header needs {header} bytes, file has {len(data)}")
    dims = struct.unpack(">" + "I" * ndim, data[4:header])
    expected = int(np.prod(dims))
    actual = len(data) - header
    if actual < expected:
        raise IdxError(
            f"byte {header}: payload truncated, expected {expected} bytes, got {actual}")
    return np.frombuffer(data, dtype=np.uint8, count=expected, offset=header).reshape(dims)


def image_mask(image, threshold: float = 0.0) -> np.ndarray:
    """Row-major indices of pixels brighter than ``threshold``."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    return np.flatnonzero(np.asarray(image, dtype=np.float64).reshape(-1) > threshold)


_DIGIT_STROKES = {
    # polylines on a 28x28 canvas, (row, col) vertices
    0: [(6, 10), (6, 17), (21, 17), (21, 10), (6, 10)],
    1: [(5, 14), (22, 14)],
    2: [(6, 9), (6, 18), (13, 18), (13, 9), (21, 9), (21, 18)],
    3: [(6, 9), (6, 18), (13, 18), (13, 11), (13, 18), (21, 18), (21, 9)],
    4: [(22, 16), (5, 16), (15, 8), (15, 19)],
    5: [(6, 18), (6, 9), (13, 9), (13, 18), (21, 18), (21, 9)],
    6: [(6, 17), (6, 9), (21, 9), (21, 18), (14, 18), (14, 9)],
    7: [(6, 8), (6, 19), (22, 12)],
    8: [(6, 9), (6, 18), (21, 18), (21, 9), (6, 9), (13, 9), (13, 18)],
    9: [(14, 18), (14, 9), (6, 9), (6, 18), (21, 18), (21, 10)],
}


def synthetic_digit_masks(size: int = 28):
    """Connected stroke masks standing in for MNIST digits.

    Returns ``{digit: (mask, intensities)}`` where intensities fade from the
    stroke centre line so the normalized strategy has varied values.
    """
    scale = size / 28.0
    out = {}
    for digit, pts in _DIGIT_STROKES.items():
        img = np.zeros((size, size))
        for (r0, c0), (r1, c1) in zip(pts, pts[1:]):
            steps = int(max(abs(r1 - r0), abs(c1 - c0)) * scale) + 1
            for k in range(steps + 1):
                r = (r0 + (r1 - r0) * k / steps) * scale
                c = (c0 + (c1 - c0) * k / steps) * scale
                ri, ci = int(round(r)), int(round(c))
                for dr, dc, v in ((0, 0, 255.0), (0, 1, 160.0), (1, 0, 160.0)):
                    rr, cc = min(ri + dr, size - 1), min(ci + dc, size - 1)
                    img[rr, cc] = max(img[rr, cc], v)
        mask = image_mask(img)
        out[digit] = (mask, img.reshape(-1)[mask])
    return out


def write_dataset_csv(path, X, y) -> None:
    """CSV with header ``y, x_0 .. x_{p-1}``; floats written with ``repr``."""
    X = np.asarray(X, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y"] + [f"x_{j}" for j in range(X.shape[1])])
        for yi, row in zip(np.asarray(y).tolist(), X.tolist()):
            writer.writerow([repr(float(yi))] + [repr(v) for v in row])


def read_dataset_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "y":
            raise ValueError(f"{path}: first column must be 'y'")
        rows = [[float(v) for v in row] for row in reader if row]
    arr = np.array(rows, dtype=np.float64).reshape(-1, len(header))
    return arr[:, 1:], arr[:, 0]


def write_truth(path, truth: GroundTruth) -> None:
    """Support indices with their values, one ``index value`` pair per line."""
    with open(path, "w") as fh:
        for i in truth.support.tolist():
            fh.write(f"{i} {float(truth.wstar[i])!r}\n")
