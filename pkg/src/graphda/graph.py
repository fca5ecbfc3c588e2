"""Graphs, supports and the weighted graph model (WGM).

Nodes are integers ``0..p-1``. Supports are sorted, duplicate-free
``int64`` arrays. Everything here is immutable and side-effect free.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "Graph",
    "WgmConfig",
    "UnionFind",
    "build_grid_graph",
    "build_toy_graph",
    "restrict",
    "support_of",
    "as_support",
    "induced_forest",
    "is_in_wgm",
    "enumerate_model_supports",
    "ENUMERATION_NODE_LIMIT",
]

ENUMERATION_NODE_LIMIT = 16


class UnionFind:
    """Disjoint sets with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, i: int) -> int:
        parent = self.parent
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(self, i: int, j: int) -> bool:
        """Merge the sets of ``i`` and ``j``; False if already merged."""
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return False
        if self.size[ri] < self.size[rj]:
            ri, rj = rj, ri
        self.parent[rj] = ri
        self.size[ri] += self.size[rj]
        return True


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph with nonnegative edge costs.

    Parameters
    ----------
    node_count : int
        Number of nodes ``p``.
    edges : array-like of shape (m, 2)
        Endpoint pairs. Self-loops and repeated pairs are rejected.
    costs : array-like of shape (m,)
        Nonnegative edge costs.
    """

    node_count: int
    edges: np.ndarray
    costs: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        p = int(self.node_count)
        if p < 1:
            raise ValueError(f"node_count must be positive, got {self.node_count}")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        costs = np.asarray(self.costs, dtype=np.float64).reshape(-1)
        if len(edges) != len(costs):
            raise ValueError(f"{len(edges)} edges but {len(costs)} costs")
        if len(edges):
            if edges.min() < 0 or edges.max() >= p:
                raise ValueError("edge endpoint out of range [0, p)")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("self-loops are not allowed")
            if not np.all(np.isfinite(costs)) or costs.min() < 0:
                raise ValueError("edge costs must be finite and nonnegative")
            lo = np.minimum(edges[:, 0], edges[:, 1])
            hi = np.maximum(edges[:, 0], edges[:, 1])
            if len(np.unique(lo * p + hi)) != len(edges):
                raise ValueError("each unordered node pair may appear at most once")
        edges.setflags(write=False)
        costs.setflags(write=False)
        object.__setattr__(self, "node_count", p)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "costs", costs)

    @classmethod
    def from_edge_list(cls, node_count, edge_list):
        """Build from ``(u, v, cost)`` triples."""
        edge_list = list(edge_list)
        edges = [(u, v) for u, v, _ in edge_list]
        costs = [c for _, _, c in edge_list]
        return cls(node_count, np.array(edges, dtype=np.int64).reshape(-1, 2), costs)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def with_costs(self, costs) -> "Graph":
        return Graph(self.node_count, self.edges, costs)

    @cached_property
    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        """Contiguous copies of the two endpoint columns."""
        return (np.ascontiguousarray(self.edges[:, 0]),
                np.ascontiguousarray(self.edges[:, 1]))

    @cached_property
    def adjacency(self) -> list[list[tuple[int, int]]]:
        """Per node, the list of ``(neighbor, edge index)``."""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.node_count)]
        for k, (u, v) in enumerate(self.edges.tolist()):
            adj[u].append((v, k))
            adj[v].append((u, k))
        return adj

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def component_count(self) -> int:
        uf = UnionFind(self.node_count)
        merged = sum(uf.union(u, v) for u, v in self.edges.tolist())
        return self.node_count - merged


@dataclass(frozen=True)
class WgmConfig:
    """Parameters ``(s, g, B)`` of the weighted graph model."""

    sparsity: int
    components: int = 1
    budget: float = float("inf")

    def __post_init__(self):
        if self.sparsity < 1:
            raise ValueError("sparsity must be >= 1")
        if not 1 <= self.components <= self.sparsity:
            raise ValueError("components must satisfy 1 <= g <= s")
        if self.budget < 0:
            raise ValueError("budget must be nonnegative")

    def validate_for(self, graph: Graph) -> None:
        if self.sparsity > graph.node_count:
            raise ValueError(
                f"sparsity {self.sparsity} exceeds node count {graph.node_count}")


def build_grid_graph(rows: int, cols: int, unit_cost: float = 1.0) -> Graph:
    """4-neighbour lattice, nodes numbered row-major."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    idx = np.arange(rows * cols, dtype=np.int64).reshape(rows, cols)
    horizontal = np.stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()], axis=1)
    vertical = np.stack([idx[:-1, :].ravel(), idx[1:, :].ravel()], axis=1)
    edges = np.concatenate([horizontal, vertical]).reshape(-1, 2)
    return Graph(rows * cols, edges, np.full(len(edges), float(unit_cost)))


# w1..w6 of the six-node toy example map to 0..5.
TOY_EDGES = ((5, 3), (3, 4), (1, 2), (2, 3), (4, 0), (0, 1), (1, 4))


def build_toy_graph() -> Graph:
    """The six-node, seven-edge unit-cost toy graph."""
    return Graph.from_edge_list(6, [(u, v, 1.0) for u, v in TOY_EDGES])


def as_support(indices, p: int | None = None) -> np.ndarray:
    """Normalize ``indices`` into a sorted unique int64 array."""
    s = np.unique(np.asarray(indices, dtype=np.int64).reshape(-1))
    if p is not None and len(s) and (s[0] < 0 or s[-1] >= p):
        raise ValueError(f"support index out of range [0, {p})")
    return s


def restrict(w, support) -> np.ndarray:
    """Copy of ``w`` with every coordinate outside ``support`` set to zero."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError("w must be one-dimensional")
    support = as_support(support, len(w))
    out = np.zeros_like(w)
    out[support] = w[support]
    return out


def support_of(w, tolerance: float = 0.0) -> np.ndarray:
    """Indices ``i`` with ``|w_i| > tolerance``."""
    if tolerance < 0:
        raise ValueError("tolerance must be nonnegative")
    return np.flatnonzero(np.abs(np.asarray(w, dtype=np.float64)) > tolerance)


def induced_forest(support, graph: Graph) -> tuple[int, float, list[int]]:
    """Minimum spanning forest of the subgraph induced by ``support``.

    Returns ``(component_count, forest_cost, edge_indices)``.
    """
    nodes = as_support(support, graph.node_count)
    if len(nodes) == 0:
        return 0, 0.0, []
    inside = np.zeros(graph.node_count, dtype=bool)
    inside[nodes] = True
    mask = inside[graph.edges[:, 0]] & inside[graph.edges[:, 1]]
    candidates = np.flatnonzero(mask)
    order = candidates[np.argsort(graph.costs[candidates], kind="stable")]
    local = {int(v): i for i, v in enumerate(nodes)}
    uf = UnionFind(len(nodes))
    chosen = []
    cost = 0.0
    for k in order.tolist():
        u, v = graph.edges[k]
        if uf.union(local[int(u)], local[int(v)]):
            chosen.append(k)
            cost += float(graph.costs[k])
    return len(nodes) - len(chosen), cost, chosen


def is_in_wgm(support, graph: Graph, cfg: WgmConfig) -> bool:
    """Membership of ``support`` in the ``(graph, s, g, B)`` model.

    The empty support is always a member. A support with fewer than ``g``
    components is accepted.
    """
    nodes = as_support(support, graph.node_count)
    if len(nodes) > cfg.sparsity:
        return False
    if len(nodes) == 0:
        return True
    components, cost, _ = induced_forest(nodes, graph)
    return components <= cfg.components and cost <= cfg.budget + 1e-12


def enumerate_model_supports(graph: Graph, cfg: WgmConfig) -> list[np.ndarray]:
    """Every support in the model, by brute force over subsets of size <= s."""
    p = graph.node_count
    if p > ENUMERATION_NODE_LIMIT:
        raise ValueError(
            f"refusing to enumerate a graph with {p} nodes "
            f"(limit is {ENUMERATION_NODE_LIMIT})")
    out = []
    for size in range(min(cfg.sparsity, p) + 1):
        for combo in itertools.combinations(range(p), size):
            if is_in_wgm(combo, graph, cfg):
                out.append(np.array(combo, dtype=np.int64))
    return out
