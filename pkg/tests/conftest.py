"""Shared builders for randomized instances used across the suite."""

from __future__ import annotations

import numpy as np
import pytest

from gridrestore import (
    CompleteGraph,
    RoadGraph,
    RoutingInstance,
    Scenario,
    ScenarioSet,
    load_road_network,
)


def random_road_graph(rng: np.random.Generator, n_nodes: int, extra_edges: int,
                      connected: bool = True) -> RoadGraph:
    """Random graph with meter lengths; a spanning tree first when connected."""
    ids = [f"n{i}" for i in range(n_nodes)]
    nodes = [
        (ids[i], 32.0 + float(rng.uniform(0, 0.5)), -97.0 + float(rng.uniform(0, 0.5)))
        for i in range(n_nodes)
    ]
    edges: list[tuple[str, str, float]] = []
    if connected:
        for i in range(1, n_nodes):
            j = int(rng.integers(0, i))
            edges.append((ids[i], ids[j], float(rng.uniform(1.0, 5000.0))))
    for _ in range(extra_edges):
        i, j = rng.integers(0, n_nodes, size=2)
        if i != j:
            edges.append((ids[int(i)], ids[int(j)], float(rng.uniform(1.0, 5000.0))))
    if not edges:
        edges.append((ids[0], ids[min(1, n_nodes - 1)], 100.0))
    return load_road_network(nodes, edges)


def random_metric_complete(rng: np.random.Generator, terminals) -> CompleteGraph:
    """Symmetric random distance matrix (not necessarily metric)."""
    n = len(terminals)
    m = rng.uniform(10.0, 9000.0, size=(n, n))
    m = (m + m.T) / 2.0
    np.fill_diagonal(m, 0.0)
    return CompleteGraph.from_distances(list(terminals), m)


def random_routing_instance(rng: np.random.Generator, max_required: int = 6,
                            max_depots: int = 3) -> RoutingInstance:
    n_dep = int(rng.integers(1, max_depots + 1))
    n_req = int(rng.integers(1, max_required + 1))
    depots = [f"d{i}" for i in range(n_dep)]
    nodes = [f"n{i}" for i in range(n_req)]
    cg = random_metric_complete(rng, depots + nodes)
    required = {
        k: frozenset(n for n in nodes if rng.random() < 0.8) for k in range(4)
    }
    rates = {k: float(rng.uniform(0.2, 3.0)) for k in range(4)}
    return RoutingInstance(cg, required, frozenset(depots), cost_rate_per_m=rates)


def random_scenario_set(rng: np.random.Generator, n_nodes: int = 3,
                        n_scenarios: int = 2) -> ScenarioSet:
    nodes = [f"n{i}" for i in range(n_nodes)]
    scenarios = []
    for s in range(n_scenarios):
        times = {(i, k): float(rng.uniform(0.5, 10.0)) for i in nodes for k in range(4)}
        demands = {(i, k): int(rng.integers(0, 10)) for i in nodes for k in range(4)}
        scenarios.append(Scenario(s, times, demands, frozenset()))
    loads = {i: float(rng.uniform(0.0, 300.0)) for i in nodes}
    return ScenarioSet(tuple(scenarios), seed=None, damaged=frozenset(nodes),
                       loads_kw=loads)


def floyd_warshall_oracle(road: RoadGraph, terminals):
    """Cubic all-pairs relaxation over millimeter weights, exact in float64."""
    ids = [n for n, _, _ in road.nodes]
    index = {n: i for i, n in enumerate(ids)}
    n = len(ids)
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    for u, v, m in road.edges:
        if u == v:
            continue
        w = float(round(m * 1000.0))
        i, j = index[u], index[v]
        dist[i, j] = min(dist[i, j], w)
        dist[j, i] = min(dist[j, i], w)
    for k in range(n):
        dist = np.minimum(dist, dist[:, k, None] + dist[None, k, :])
    t_idx = [index[t] for t in terminals]
    return dist[np.ix_(t_idx, t_idx)]  # millimeters, inf when unreachable


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
