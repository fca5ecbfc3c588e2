import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from graphda.graph import (Graph, WgmConfig, build_grid_graph, build_toy_graph,
                           enumerate_model_supports, induced_forest, is_in_wgm, restrict,
                           support_of)


def random_graph(rng, p, density=0.5, max_cost=5):
    edges = [(u, v, float(rng.integers(1, max_cost + 1)))
             for u, v in itertools.combinations(range(p), 2) if rng.random() < density]
    return Graph.from_edge_list(p, edges)


def bfs_components(nodes, graph):
    nodes = set(int(v) for v in nodes)
    seen, count = set(), 0
    for start in sorted(nodes):
        if start in seen:
            continue
        count += 1
        stack = [start]
        seen.add(start)
        while stack:
            u = stack.pop()
            for v, _ in graph.adjacency[u]:
                if v in nodes and v not in seen:
                    seen.add(v)
                    stack.append(v)
    return count


@pytest.mark.parametrize("rows,cols,nodes,edges",
                         [(33, 33, 1089, 2112), (1, 1, 1, 0), (2, 2, 4, 4), (3, 5, 15, 22)])
def test_grid_counts(rows, cols, nodes, edges):
    g = build_grid_graph(rows, cols)
    assert g.node_count == nodes
    assert g.edge_count == edges
    assert np.all(g.costs == 1.0)


def test_grid_unit_cost_and_neighbours():
    g = build_grid_graph(3, 3, unit_cost=2.5)
    assert np.all(g.costs == 2.5)
    assert sorted(v for v, _ in g.adjacency[4]) == [1, 3, 5, 7]


def test_toy_graph():
    g = build_toy_graph()
    assert (g.node_count, g.edge_count) == (6, 7)
    assert np.all(g.costs == 1.0)
    assert g.degree(3) == 3
    assert bfs_components(range(6), g) == 1
    assert g.component_count() == 1


@pytest.mark.parametrize("edges,costs", [
    ([(0, 0)], [1.0]),
    ([(0, 3)], [1.0]),
    ([(0, 1), (1, 0)], [1.0, 1.0]),
    ([(0, 1)], [-1.0]),
    ([(0, 1)], [1.0, 2.0]),
])
def test_graph_rejects_bad_input(edges, costs):
    with pytest.raises(ValueError):
        Graph(3, np.array(edges), costs)


def test_restrict_and_support():
    assert np.array_equal(restrict([1.0, 2.0, 3.0], [0, 2]), [1.0, 0.0, 3.0])
    assert np.array_equal(restrict(np.zeros(4), [1, 2]), np.zeros(4))
    w = np.array([4.0, -1.0, 2.0])
    assert np.array_equal(restrict(w, [0, 1, 2]), w)
    assert list(support_of([0, 0.5, 0, -0.1])) == [1, 3]
    assert len(support_of(np.zeros(3))) == 0
    assert list(support_of([1e-12, 1.0], 1e-9)) == [1]
    with pytest.raises(ValueError):
        restrict([1.0, 2.0], [5])
    with pytest.raises(ValueError):
        support_of([1.0], -1.0)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=20), st.data())
def test_restrict_idempotent_and_pythagoras(values, data):
    w = np.array(values)
    S = data.draw(st.lists(st.integers(0, len(w) - 1), max_size=len(w)))
    r = restrict(w, S)
    assert np.array_equal(restrict(r, S), r)
    lhs = w @ w - r @ r
    rhs = (w - r) @ (w - r)
    assert abs(lhs - rhs) <= 1e-12 * max(w @ w, 1.0)


def test_wgm_membership_toy():
    g = build_toy_graph()
    cfg = WgmConfig(3, 1, 3.0)
    assert is_in_wgm([0, 1, 4], g, cfg)
    assert not is_in_wgm([1, 4, 5], g, cfg)
    assert not is_in_wgm([2, 3, 4, 5], g, cfg)
    assert is_in_wgm([], g, cfg)


def test_wgm_config_validation():
    with pytest.raises(ValueError):
        WgmConfig(0)
    with pytest.raises(ValueError):
        WgmConfig(2, 3)
    with pytest.raises(ValueError):
        WgmConfig(2, 1, -1.0)


def test_enumerate_examples():
    g = build_toy_graph()
    sets = {tuple(s) for s in enumerate_model_supports(g, WgmConfig(3, 1, 3.0))}
    assert (0, 1, 4) in sets
    assert {tuple(s) for s in enumerate_model_supports(g, WgmConfig(1, 1, 0.0))} == \
        {(), (0,), (1,), (2,), (3,), (4,), (5,)}
    assert all((v,) in sets for v in range(6))


def test_enumerate_guard():
    with pytest.raises(ValueError, match="16"):
        enumerate_model_supports(build_grid_graph(5, 5), WgmConfig(2))


@pytest.mark.parametrize("seed", range(5))
def test_enumerate_agrees_with_membership(seed):
    rng = np.random.default_rng(seed)
    p = int(rng.integers(3, 9))
    g = random_graph(rng, p)
    cfg = WgmConfig(int(rng.integers(1, p + 1)), 1, float(rng.integers(0, 8)))
    cfg = WgmConfig(cfg.sparsity, int(rng.integers(1, cfg.sparsity + 1)), cfg.budget)
    listed = {tuple(s) for s in enumerate_model_supports(g, cfg)}
    for k in range(p + 1):
        for S in itertools.combinations(range(p), k):
            assert (S in listed) == is_in_wgm(S, g, cfg)


@given(st.integers(0, 10_000))
def test_wgm_monotone(seed):
    rng = np.random.default_rng(seed)
    p = 7
    g = random_graph(rng, p, 0.5, 3)
    S = rng.choice(p, size=int(rng.integers(0, p + 1)), replace=False)
    s = int(rng.integers(1, p + 1))
    comps = int(rng.integers(1, s + 1))
    B = float(rng.integers(0, 10))
    if is_in_wgm(S, g, WgmConfig(s, comps, B)):
        assert is_in_wgm(S, g, WgmConfig(min(s + int(rng.integers(0, 3)), p + 2), comps,
                                         B + float(rng.integers(0, 4))))


@given(st.integers(0, 10_000))
def test_induced_forest_matches_bfs(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, 9, 0.3)
    S = rng.choice(9, size=int(rng.integers(0, 10)), replace=False)
    comps, cost, edges = induced_forest(S, g)
    assert comps == (bfs_components(S, g) if len(S) else 0)
    assert len(edges) == len(S) - comps
    assert cost == pytest.approx(g.costs[edges].sum())
