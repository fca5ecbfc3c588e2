"""Prize-collecting Steiner forests.

``solve_pcst`` runs unrooted Goemans-Williamson moat growth with GW pruning
(the compiled kernel lives in ``_gw``). ``brute_force_pcst`` is the exact
exponential-time reference used to check the approximation guarantee.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ._gw import gw_forest
from .graph import Graph, UnionFind, as_support, induced_forest

__all__ = [
    "PcstInstance",
    "Forest",
    "solve_pcst",
    "pcst_forest",
    "pcst_objective",
    "brute_force_pcst",
    "BRUTE_FORCE_NODE_LIMIT",
]

BRUTE_FORCE_NODE_LIMIT = 12


@dataclass(frozen=True)
class PcstInstance:
    graph: Graph
    prizes: np.ndarray
    target_components: int = 1
    cost_scale: float = 1.0

    def __post_init__(self):
        prizes = np.asarray(self.prizes, dtype=np.float64).reshape(-1)
        if len(prizes) != self.graph.node_count:
            raise ValueError(
                f"expected {self.graph.node_count} prizes, got {len(prizes)}")
        if not np.all(np.isfinite(prizes)) or (len(prizes) and prizes.min() < 0):
            raise ValueError("prizes must be finite and nonnegative")
        if self.target_components < 1:
            raise ValueError("target_components must be >= 1")
        if not np.isfinite(self.cost_scale) or self.cost_scale < 0:
            raise ValueError("cost_scale must be finite and nonnegative")
        object.__setattr__(self, "prizes", prizes)


@dataclass(frozen=True)
class Forest:
    """Selected nodes plus the indices (into ``graph.edges``) of selected edges."""

    nodes: np.ndarray
    edges: np.ndarray

    @classmethod
    def empty(cls) -> "Forest":
        return cls(np.empty(0, np.int64), np.empty(0, np.int64))

    def __len__(self) -> int:
        return len(self.nodes)

    def component_count(self) -> int:
        return len(self.nodes) - len(self.edges)

    def edge_cost(self, graph: Graph) -> float:
        return float(graph.costs[self.edges].sum())

    def validate(self, graph: Graph, max_components: int | None = None) -> None:
        """Raise ``ValueError`` unless this is an acyclic forest on ``graph``."""
        nodes = np.asarray(self.nodes, dtype=np.int64)
        edges = np.asarray(self.edges, dtype=np.int64)
        if len(np.unique(nodes)) != len(nodes):
            raise ValueError("forest nodes contain duplicates")
        if len(nodes) and (nodes.min() < 0 or nodes.max() >= graph.node_count):
            raise ValueError("forest node out of range")
        if len(np.unique(edges)) != len(edges):
            raise ValueError("forest edges contain duplicates")
        if len(edges) and (edges.min() < 0 or edges.max() >= graph.edge_count):
            raise ValueError("forest edge index out of range")
        inside = set(nodes.tolist())
        local = {v: i for i, v in enumerate(nodes.tolist())}
        uf = UnionFind(len(nodes))
        for u, v in graph.edges[edges].tolist():
            if u not in inside or v not in inside:
                raise ValueError(f"edge ({u}, {v}) has an endpoint outside the forest")
            if not uf.union(local[u], local[v]):
                raise ValueError(f"edge ({u}, {v}) closes a cycle")
        if max_components is not None and self.component_count() > max_components:
            raise ValueError(
                f"forest has {self.component_count()} components, "
                f"limit is {max_components}")


def _tree_split(nodes: np.ndarray, edges: np.ndarray, graph: Graph):
    local = {v: i for i, v in enumerate(nodes.tolist())}
    uf = UnionFind(len(nodes))
    for u, v in graph.edges[edges].tolist():
        uf.union(local[u], local[v])
    roots = np.array([uf.find(i) for i in range(len(nodes))], dtype=np.int64)
    edge_roots = np.array(
        [uf.find(local[int(u)]) for u in graph.edges[edges, 0]], dtype=np.int64)
    return roots, edge_roots


def _keep_best_trees(forest: Forest, graph: Graph, prizes, scale, g) -> Forest:
    if forest.component_count() <= g:
        return forest
    roots, edge_roots = _tree_split(forest.nodes, forest.edges, graph)
    labels = np.unique(roots)
    if len(labels) <= g:
        return forest
    value = {}
    for lab in labels.tolist():
        node_mask = roots == lab
        edge_mask = edge_roots == lab
        value[lab] = (prizes[forest.nodes[node_mask]].sum()
                      - scale * graph.costs[forest.edges[edge_mask]].sum())
    best = sorted(labels.tolist(), key=lambda lab: (-value[lab], lab))[:g]
    keep_nodes = np.isin(roots, best)
    keep_edges = np.isin(edge_roots, best)
    return Forest(forest.nodes[keep_nodes], forest.edges[keep_edges])


def pcst_forest(graph: Graph, prizes: np.ndarray, target_components: int = 1,
                cost_scale: float = 1.0) -> Forest:
    """Unvalidated fast path behind :func:`solve_pcst`."""
    costs = graph.costs * cost_scale
    if not np.any(prizes > 0):
        return Forest.empty()
    zero = costs <= 0.0
    if not zero.any():
        eu, ev = graph.endpoints
        mask, kept = gw_forest(graph.node_count, eu, ev, costs, prizes,
                               int(target_components))
        forest = Forest(np.flatnonzero(mask), np.sort(kept))
    else:
        forest = _solve_contracted(graph, costs, prizes, target_components)
    return _keep_best_trees(forest, graph, prizes, cost_scale, target_components)


def _solve_contracted(graph, costs, prizes, g) -> Forest:
    """Contract zero-cost edges, solve, and expand the super-nodes again."""
    p = graph.node_count
    uf = UnionFind(p)
    glue = []
    for k in np.flatnonzero(costs <= 0.0).tolist():
        u, v = graph.edges[k]
        if uf.union(int(u), int(v)):
            glue.append(k)
    roots = np.array([uf.find(i) for i in range(p)], dtype=np.int64)
    labels, super_of = np.unique(roots, return_inverse=True)
    q = len(labels)
    super_prizes = np.bincount(super_of, weights=prizes, minlength=q)
    best: dict[tuple[int, int], int] = {}
    for k in np.flatnonzero(costs > 0.0).tolist():
        a, b = super_of[graph.edges[k, 0]], super_of[graph.edges[k, 1]]
        if a == b:
            continue
        pair = (min(a, b), max(a, b))
        if pair not in best or costs[k] < costs[best[pair]]:
            best[pair] = k
    keys = sorted(best)
    orig = np.array([best[key] for key in keys], dtype=np.int64)
    eu = np.array([key[0] for key in keys], dtype=np.int64)
    ev = np.array([key[1] for key in keys], dtype=np.int64)
    mask, kept = gw_forest(q, eu, ev, costs[orig], super_prizes, int(g))
    chosen = np.flatnonzero(mask)
    nodes = np.flatnonzero(np.isin(super_of, chosen))
    glue = np.array(glue, dtype=np.int64)
    glue = glue[np.isin(super_of[graph.edges[glue, 0]], chosen)] if len(glue) else glue
    edges = np.sort(np.concatenate([orig[kept], glue]).astype(np.int64))
    return Forest(nodes, edges)


def solve_pcst(instance: PcstInstance) -> Forest:
    """Goemans-Williamson forest with at most ``target_components`` trees."""
    return pcst_forest(instance.graph, instance.prizes,
                       instance.target_components, instance.cost_scale)


def pcst_objective(graph: Graph, prizes, forest: Forest, cost_scale: float = 1.0) -> float:
    """Scaled cost of the forest's edges plus the prizes of nodes left out."""
    prizes = np.asarray(prizes, dtype=np.float64)
    if len(prizes) != graph.node_count:
        raise ValueError("prizes length does not match the graph")
    forest.validate(graph)
    missed = prizes.sum() - prizes[np.asarray(forest.nodes, dtype=np.int64)].sum()
    return float(cost_scale * forest.edge_cost(graph) + missed)


def _cheapest_forest(nodes, graph, costs, g):
    """Cheapest forest spanning ``nodes`` with at most ``g`` trees, or None."""
    inside = np.zeros(graph.node_count, dtype=bool)
    inside[list(nodes)] = True
    cand = np.flatnonzero(inside[graph.edges[:, 0]] & inside[graph.edges[:, 1]])
    cand = cand[np.argsort(costs[cand], kind="stable")]
    local = {v: i for i, v in enumerate(nodes)}
    uf = UnionFind(len(nodes))
    chosen = []
    for k in cand.tolist():
        if uf.union(local[int(graph.edges[k, 0])], local[int(graph.edges[k, 1])]):
            chosen.append(k)
    components = len(nodes) - len(chosen)
    if components > g:
        return None
    # dropping the heaviest spanning-forest edges is optimal for a k-forest
    spare = g - components
    while spare > 0 and chosen and costs[chosen[-1]] > 0:
        chosen.pop()
        spare -= 1
    return chosen


def brute_force_pcst(graph: Graph, prizes, g: int = 1, cost_scale: float = 1.0) -> Forest:
    """Exact minimizer of :func:`pcst_objective` over forests with <= g trees.

    Ties go to the smaller node set, then to the lexicographically smaller one.
    """
    p = graph.node_count
    if p > BRUTE_FORCE_NODE_LIMIT:
        raise ValueError(
            f"refusing brute-force PCST on {p} nodes "
            f"(limit is {BRUTE_FORCE_NODE_LIMIT})")
    prizes = np.asarray(prizes, dtype=np.float64)
    costs = graph.costs * cost_scale
    total = prizes.sum()
    best = Forest.empty()
    best_val = total
    for size in range(1, p + 1):
        for combo in itertools.combinations(range(p), size):
            chosen = _cheapest_forest(combo, graph, costs, g)
            if chosen is None:
                continue
            val = costs[chosen].sum() + total - prizes[list(combo)].sum()
            if val < best_val - 1e-12:
                best_val = val
                best = Forest(np.array(combo, dtype=np.int64),
                              np.sort(np.array(chosen, dtype=np.int64)))
    return best


def forest_from_support(support, graph: Graph) -> Forest:
    """Minimum spanning forest of the subgraph induced by ``support``."""
    nodes = as_support(support, graph.node_count)
    _, _, chosen = induced_forest(nodes, graph)
    return Forest(nodes, np.sort(np.array(chosen, dtype=np.int64)))
