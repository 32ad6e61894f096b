"""Road graph construction, projection, failures, and metric closure."""

import logging
import math

import numpy as np
import pytest

from gridrestore import (
    CompleteGraph,
    CoupledNetwork,
    PowerNode,
    apply_road_failures,
    build_coupled_network,
    load_road_network,
    project_power_nodes,
    shortest_path_matrix,
)
from gridrestore.errors import (
    DanglingEdgeError,
    EmptyRoadGraphError,
    NonPositiveLengthError,
    UnknownTerminalError,
)
from gridrestore.geo import haversine_m

from conftest import floyd_warshall_oracle, random_road_graph

NODES3 = [("a", 32.0, -97.0), ("b", 32.01, -97.0), ("c", 32.02, -97.0)]


class TestLoadRoadNetwork:
    def test_direct_construction(self):
        g = load_road_network(NODES3, [("a", "b", 100.0), ("b", "c", 200.0)])
        assert g.n_nodes == 3
        assert g.n_edges == 2

    def test_duplicate_edges_collapse_to_minimum(self):
        g = load_road_network(NODES3, [("a", "b", 100.0), ("a", "b", 80.0), ("b", "a", 90.0)])
        assert g.n_edges == 1
        assert g.edge_length_m("a", "b") == 0.080 * 1000

    def test_dangling_edge(self):
        with pytest.raises(DanglingEdgeError, match="z"):
            load_road_network(NODES3, [("a", "z", 50.0)])

    def test_non_positive_length(self):
        with pytest.raises(NonPositiveLengthError):
            load_road_network(NODES3, [("a", "b", 0.0)])
        with pytest.raises(NonPositiveLengthError):
            load_road_network(NODES3, [("a", "b", -5.0)])

    def test_duplicate_node_id(self):
        with pytest.raises(ValueError, match="duplicate"):
            load_road_network(NODES3 + [("a", 33.0, -96.0)], [])

    def test_lengths_quantized_to_millimeters(self):
        g = load_road_network(NODES3, [("a", "b", 123.4567)])
        assert g.edge_length_m("a", "b") == 123.457


class TestProjection:
    def test_identity_snap(self):
        road = load_road_network(NODES3, [("a", "b", 100.0)])
        p = PowerNode("bus1", -97.0, 32.01, 10.0, "transformer")
        mapping = project_power_nodes([p], 0.0, 0.0, road)
        assert mapping == {"bus1": "b"}

    def test_offsets_translate_local_frame(self):
        road = load_road_network(NODES3, [("a", "b", 100.0)])
        p = PowerNode("bus1", 0.5, 0.52, 10.0, "line")
        mapping = project_power_nodes([p], -97.5, 31.5, road)
        assert mapping == {"bus1": "c"}

    def test_tie_breaks_to_smallest_node_id(self):
        # two road nodes at the same coordinates: exact distance tie
        road = load_road_network(
            [("x2", 32.0, -97.0), ("x1", 32.0, -97.0), ("far", 35.0, -90.0)],
            [("x1", "x2", 1.0)],
        )
        p = PowerNode("bus1", -97.001, 32.0, 0.0, "switch")
        assert project_power_nodes([p], 0.0, 0.0, road) == {"bus1": "x1"}

    def test_empty_road_graph(self):
        road = load_road_network([], [])
        with pytest.raises(EmptyRoadGraphError):
            project_power_nodes([PowerNode("b", 0, 0, 0, "line")], 0, 0, road)

    def test_matches_brute_force_nearest_neighbor(self, rng):
        road = random_road_graph(rng, 40, 20)
        power = [
            PowerNode(f"bus{i}", float(rng.uniform(-97.5, -96.5)),
                      float(rng.uniform(31.5, 32.5)), 1.0, "line")
            for i in range(5)
        ]
        mapping = project_power_nodes(power, 0.0, 0.0, road)
        for p in power:
            best = min(
                road.nodes,
                key=lambda row: (haversine_m(p.local_y, p.local_x, row[1], row[2]), str(row[0])),
            )
            assert mapping[p.bus_id] == best[0]

    def test_projection_idempotent(self, rng):
        road = random_road_graph(rng, 30, 10)
        power = [
            PowerNode(f"bus{i}", float(rng.uniform(-97.5, -96.5)),
                      float(rng.uniform(31.5, 32.5)), 1.0, "line")
            for i in range(8)
        ]
        first = project_power_nodes(power, 0.0, 0.0, road)
        snapped = [
            PowerNode(p.bus_id, road.coord(first[p.bus_id])[1],
                      road.coord(first[p.bus_id])[0], 1.0, "line")
            for p in power
        ]
        second = project_power_nodes(snapped, 0.0, 0.0, road)
        assert first == second

    def test_power_node_validation(self):
        with pytest.raises(ValueError):
            PowerNode("b", 0, 0, -1.0, "line")
        with pytest.raises(ValueError):
            PowerNode("b", 0, 0, 1.0, "generator")


class TestRoadFailures:
    def test_empty_failure_set_is_identity(self):
        g = load_road_network(NODES3, [("a", "b", 100.0), ("b", "c", 200.0)])
        assert apply_road_failures(g, []) == g

    def test_failing_only_path_disconnects(self):
        g = load_road_network(NODES3, [("a", "b", 100.0), ("b", "c", 200.0)])
        g2 = apply_road_failures(g, [("b", "a")])
        cg = shortest_path_matrix(g2, ["a", "b"])
        assert not cg.is_reachable("a", "b")
        assert math.isinf(cg.dist_m("a", "b"))

    def test_ring_reroutes_the_long_way(self):
        ids = ["a", "b", "c", "d", "e"]
        nodes = [(i, 32.0, -97.0 + 0.001 * n) for n, i in enumerate(ids)]
        lengths = {("a", "b"): 10.0, ("b", "c"): 20.0, ("c", "d"): 30.0,
                   ("d", "e"): 40.0, ("e", "a"): 50.0}
        g = load_road_network(nodes, [(u, v, m) for (u, v), m in lengths.items()])
        cg = shortest_path_matrix(g, ["a", "c"])
        assert cg.dist_m("a", "c") == 30.0  # a-b-c
        g2 = apply_road_failures(g, [("a", "b"), ("b", "c")])
        cg2 = shortest_path_matrix(g2, ["a", "c"])
        assert cg2.dist_m("a", "c") == 50.0 + 40.0 + 30.0  # a-e-d-c

    def test_unknown_pairs_warn_but_pass(self, caplog):
        g = load_road_network(NODES3, [("a", "b", 100.0)])
        with caplog.at_level(logging.WARNING, logger="gridrestore.network"):
            g2 = apply_road_failures(g, [("a", "c"), ("b", "a")])
        assert g2.n_edges == 0
        assert "1 failure pair(s)" in caplog.text

    def test_input_graph_untouched(self):
        g = load_road_network(NODES3, [("a", "b", 100.0)])
        apply_road_failures(g, [("a", "b")])
        assert g.n_edges == 1

    def test_failures_never_shorten_paths(self, rng):
        for _ in range(25):
            g = random_road_graph(rng, 12, 8)
            terms = [n for n, _, _ in g.nodes][:4]
            before = shortest_path_matrix(g, terms)
            kill = [
                (u, v) for u, v, _ in g.edges if rng.random() < 0.3
            ]
            after = shortest_path_matrix(apply_road_failures(g, kill), terms)
            assert np.all(after.dist >= before.dist - 0.0)


class TestShortestPathMatrix:
    def test_line_graph(self):
        g = load_road_network(NODES3, [("a", "b", 100.0), ("b", "c", 200.0)])
        cg = shortest_path_matrix(g, ["a", "c"])
        assert cg.dist_m("a", "c") == 300.0

    def test_self_distance_zero(self):
        g = load_road_network(NODES3, [("a", "b", 100.0)])
        cg = shortest_path_matrix(g, ["a", "b", "c"])
        for t in ("a", "b", "c"):
            assert cg.dist_m(t, t) == 0.0

    def test_unknown_terminal(self):
        g = load_road_network(NODES3, [("a", "b", 100.0)])
        with pytest.raises(UnknownTerminalError):
            shortest_path_matrix(g, ["a", "zz"])

    def test_matches_all_pairs_oracle(self, rng):
        g = random_road_graph(rng, 30, 25)
        ids = [n for n, _, _ in g.nodes]
        terms = [ids[int(i)] for i in rng.choice(len(ids), size=6, replace=False)]
        cg = shortest_path_matrix(g, terms)
        oracle_mm = floyd_warshall_oracle(g, terms)
        got_mm = np.where(cg.reachable, cg.dist_mm.astype(float), np.inf)
        assert np.array_equal(got_mm, oracle_mm)

    def test_metric_closure_triangle_inequality(self, rng):
        for _ in range(10):
            g = random_road_graph(rng, 15, 10)
            ids = [n for n, _, _ in g.nodes]
            cg = shortest_path_matrix(g, ids[:6])
            d = cg.dist_mm
            n = len(cg.terminals)
            for i in range(n):
                for j in range(n):
                    for k in range(n):
                        assert d[i, j] <= d[i, k] + d[k, j]

    def test_symmetry_exact(self, rng):
        g = random_road_graph(rng, 25, 20)
        ids = [n for n, _, _ in g.nodes]
        cg = shortest_path_matrix(g, ids[:8])
        assert np.array_equal(cg.dist_mm, cg.dist_mm.T)

    def test_path_reconstruction(self):
        g = load_road_network(NODES3, [("a", "b", 100.0), ("b", "c", 200.0)])
        cg = shortest_path_matrix(g, ["a", "c"])
        assert cg.path("a", "c") == ("a", "b", "c")
        assert cg.path("a", "a") == ("a",)
        # reconstructed path length adds up to the matrix entry
        path = cg.path("a", "c")
        total = sum(g.edge_length_m(u, v) for u, v in zip(path, path[1:]))
        assert total == cg.dist_m("a", "c")


class TestCompleteGraphType:
    def test_from_distances_roundtrip(self):
        m = [[0.0, 12.5], [12.5, 0.0]]
        cg = CompleteGraph.from_distances(["x", "y"], m)
        assert cg.dist_m("x", "y") == 12.5
        assert cg.path("x", "y") is None  # no predecessor data

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            CompleteGraph.from_distances(["x", "y"], [[0.0, 1.0], [2.0, 0.0]])

    def test_rejects_nonzero_diagonal(self):
        with pytest.raises(ValueError):
            CompleteGraph.from_distances(["x", "y"], [[1.0, 1.0], [1.0, 0.0]])

    def test_unreachable_marked(self):
        m = [[0.0, np.inf], [np.inf, 0.0]]
        cg = CompleteGraph.from_distances(["x", "y"], m)
        assert not cg.is_reachable("x", "y")
        assert math.isinf(cg.dist_m("x", "y"))


class TestCoupledNetwork:
    def test_depot_damaged_overlap_rejected(self):
        road = load_road_network(NODES3, [("a", "b", 100.0)])
        with pytest.raises(ValueError, match="overlap"):
            CoupledNetwork(road, {}, frozenset(["a"]), frozenset(["a"]))

    def test_unknown_depot_named(self):
        road = load_road_network(NODES3, [("a", "b", 100.0)])
        with pytest.raises(ValueError, match="'zz'"):
            CoupledNetwork(road, {}, frozenset(["zz"]), frozenset())

    def test_build_aggregates_loads_per_road_node(self):
        road = load_road_network(NODES3, [("a", "b", 100.0)])
        power = [
            PowerNode("b1", -97.0, 32.0, 10.0, "line"),
            PowerNode("b2", -97.0, 32.0, 5.0, "switch"),
            PowerNode("b3", -97.0, 32.02, 2.0, "transformer"),
        ]
        net = build_coupled_network(road, power, 0.0, 0.0, ["b"])
        assert net.loads_kw == {"a": 15.0, "c": 2.0}
        assert net.power_to_road == {"b1": "a", "b2": "a", "b3": "c"}

    def test_terminals_sorted(self):
        road = load_road_network(NODES3, [("a", "b", 100.0), ("b", "c", 200.0)])
        net = CoupledNetwork(road, {}, frozenset(["c"]), frozenset(["a"]))
        assert net.terminals() == ("a", "c")
