import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leocascade.errors import IntegrityError
from leocascade.routing import (
    LoadState,
    RouteOptions,
    RoutedFlow,
    RoutingGraph,
    accumulate_loads,
    route_all,
    route_flow,
)
from leocascade.traffic import Flow

from synthetic import make_snapshot, random_hop_case, random_instance

NO_DELAY = RouteOptions(delta=0.0)


def test_hop_count_matches_bfs_on_random_graphs():
    rng = np.random.default_rng(11)
    for _ in range(50):
        snap, flow, g = random_hop_case(rng)
        rf = route_flow(RoutingGraph(snap), flow, LoadState.zeros(RoutingGraph(snap)), NO_DELAY)
        if nx.has_path(g, "u0", "g0"):
            assert rf.served
            assert len(rf.path) - 1 == nx.shortest_path_length(g, "u0", "g0")
        else:
            assert not rf.served


def parallel_routes():
    # u -> b -> {s1 | s2} -> f -> g, two 3-hop middles through different satellites
    caps = {"u": np.inf, "b": 1e9, "s1": 1e9, "s2": 1e9, "s3": 1e9, "s4": 1e9, "f": 1e9, "g": 1e9}
    links = [("u", "b"), ("b", "s1"), ("s1", "s2"), ("s2", "f"),
             ("b", "s3"), ("s3", "s4"), ("s4", "f"), ("f", "g")]
    return make_snapshot(caps, links, edge_cap=100.0)


def test_unloaded_parallel_route_preferred():
    snap = parallel_routes()
    graph = RoutingGraph(snap)
    loads = LoadState.zeros(graph)
    for a, b in (("b", "s1"), ("s1", "s2"), ("s2", "f")):
        loads.edge_load[graph.pair_edge[(graph.index[a], graph.index[b])]] = 90.0
    # by hand: loaded middle costs 3/10, free middle 3/100
    rf = route_flow(graph, Flow("u", "g", 1.0), loads, NO_DELAY)
    assert rf.path == ("u", "b", "s3", "s4", "f", "g")


def test_user_without_access_is_unserved():
    snap = make_snapshot({"u": np.inf, "b": 10.0, "s": 10.0, "g": 10.0, "f": 10.0},
                         [("b", "s"), ("s", "f"), ("f", "g")])
    graph = RoutingGraph(snap)
    assert not route_flow(graph, Flow("u", "g", 1.0), LoadState.zeros(graph)).served


def test_saturated_edge_is_excluded():
    snap = parallel_routes()
    graph = RoutingGraph(snap)
    loads = LoadState.zeros(graph)
    k = graph.pair_edge[(graph.index["b"], graph.index["s3"])]
    loads.edge_load[k] = 100.0
    rf = route_flow(graph, Flow("u", "g", 1.0), loads, NO_DELAY)
    assert "s3" not in rf.path


def test_empty_flow_list():
    snap = parallel_routes()
    routed, loads = route_all(snap, [])
    assert routed == []
    assert not loads.node_load.any() and not loads.edge_load.any()


def test_demand_below_bottleneck_all_served():
    # four nodes: two disjoint user-gateway paths with capacity 10 each, total demand 12
    snap = make_snapshot({"u1": np.inf, "u2": np.inf, "s1": 100.0, "g": 100.0},
                         [("u1", "s1"), ("u2", "s1"), ("s1", "g")], edge_cap=20.0)
    routed, loads = route_all(snap, [Flow("u1", "g", 5.0), Flow("u2", "g", 7.0)])
    assert all(rf.served for rf in routed)
    graph = RoutingGraph.of(snap)
    assert loads.node_load[graph.index["s1"]] == pytest.approx(12.0)


def test_route_all_deterministic_and_order_invariant():
    rng = np.random.default_rng(5)
    for _ in range(20):
        snap, flows = random_instance(rng)
        _, a = route_all(snap, flows)
        _, b = route_all(snap, list(reversed(flows)))
        _, c = route_all(snap, flows)
        assert np.array_equal(a.node_load, b.node_load)
        assert np.array_equal(a.node_load, c.node_load)
        assert np.array_equal(a.edge_load, c.edge_load)


def test_single_path_load():
    snap = make_snapshot({"u": np.inf, "b": 10.0, "s": 10.0, "g": 10.0},
                         [("u", "b"), ("b", "s"), ("s", "g")])
    graph = RoutingGraph(snap)
    routed, loads = route_all(graph, [Flow("u", "g", 5.0)])
    assert routed[0].path == ("u", "b", "s", "g")
    assert loads.node_map(graph) == {"b": 5.0, "g": 5.0, "s": 5.0, "u": 5.0}


def test_two_flows_share_satellite():
    snap = make_snapshot({"u1": np.inf, "u2": np.inf, "s": 100.0, "g": 100.0},
                         [("u1", "s"), ("u2", "s"), ("s", "g")])
    graph = RoutingGraph(snap)
    _, loads = route_all(graph, [Flow("u1", "g", 2.0), Flow("u2", "g", 3.0)])
    assert loads.node_load[graph.index["s"]] == 5.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_loads_match_independent_recount(seed):
    snap, flows = random_instance(np.random.default_rng(seed), max_sats=4, max_users=6)
    graph = RoutingGraph(snap)
    routed, loads = route_all(graph, flows)
    node = {n.id: 0.0 for n in snap.nodes}
    for rf in routed:
        if rf.path:
            assert rf.path[0] == rf.flow.user
            assert len(set(rf.path)) == len(rf.path)
            for v in rf.path:
                node[v] += rf.flow.demand
    assert loads.node_map(graph) == pytest.approx(node)
    again = accumulate_loads(graph, routed)
    assert np.allclose(again.node_load, loads.node_load)
    assert np.allclose(again.edge_load, loads.edge_load)
    served = sum(rf.flow.demand for rf in routed if rf.served)
    users = sum(loads.node_load[graph.index[f.user]] for f in flows)
    assert users == pytest.approx(served)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_paths_avoid_edges_saturated_before_routing(seed):
    rng = np.random.default_rng(seed)
    snap, flows = random_instance(rng)
    graph = RoutingGraph(snap)
    loads = LoadState.zeros(graph)
    full = rng.random(graph.n_edges) < 0.3
    loads.edge_load[full] = graph.edge_capacity[full]
    before = loads.edge_load.copy()
    for f in flows:
        rf = route_flow(graph, f, loads)
        if rf.served:
            assert not (graph.edge_capacity[rf.edges] - before[rf.edges] <= 1e-9).any()


def test_recount_rejects_unknown_node():
    snap = parallel_routes()
    graph = RoutingGraph(snap)
    bogus = RoutedFlow(Flow("u", "g", 1.0), np.array([0]), np.array([], dtype=int),
                       path=("u", "zz", "g"))
    with pytest.raises(IntegrityError):
        accumulate_loads(graph, [bogus])


def test_rehome_to_reachable_gateway():
    snap = make_snapshot({"u": np.inf, "s": 10.0, "g1": 10.0, "g2": 10.0},
                         [("u", "s"), ("s", "g1")])
    graph = RoutingGraph(snap)
    rf = route_flow(graph, Flow("u", "g2", 1.0), LoadState.zeros(graph))
    assert rf.gateway == "g1"
    rf = route_flow(graph, Flow("u", "g2", 1.0), LoadState.zeros(graph),
                    RouteOptions(rehome=False))
    assert not rf.served
