"""Load-aware shortest-path routing and load aggregation.

Edge weight is ``1 / (C - L) + delta * delay``; edges with residual at or
below ``EPS`` are unusable. Users originate traffic and gateways terminate it; neither relays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, dijkstra

from .errors import IntegrityError
from .topology import NodeKind, Snapshot
from .traffic import Flow

EPS = 1e-9
DEFAULT_DELTA = 1e-4  # per ms


_KIND_CODE = {k: i for i, k in enumerate(NodeKind)}


def _reach(n: int, rows: np.ndarray, cols: np.ndarray, seeds: np.ndarray) -> np.ndarray:
    """Nodes reachable along arcs rows -> cols from any seed (seeds included)."""
    if n == 0:
        return np.zeros(0, dtype=bool)
    hub = np.full(int(seeds.sum()), n)
    r = np.concatenate([rows, hub])
    c = np.concatenate([cols, np.flatnonzero(seeds)])
    mat = csr_matrix((np.ones(len(r)), (r, c)), shape=(n + 1, n + 1))
    order = breadth_first_order(mat, n, directed=True, return_predecessors=False)
    out = np.zeros(n + 1, dtype=bool)
    out[order] = True
    return out[:n]


class RoutingGraph:
    """Array view of a snapshot for repeated shortest-path queries."""

    def __init__(self, snapshot: Snapshot):
        self.snapshot = snapshot
        self.ids = [n.id for n in snapshot.nodes]
        self.index = snapshot.index
        n = len(self.ids)
        self.n_nodes = n
        self.kinds = [n.kind for n in snapshot.nodes]
        self.is_user = np.array([k == NodeKind.USER for k in self.kinds], dtype=bool)
        self.is_gateway = np.array([k == NodeKind.GATEWAY for k in self.kinds], dtype=bool)
        self.node_capacity = np.array(
            [np.inf if k == NodeKind.USER else nd.capacity
             for k, nd in zip(self.kinds, snapshot.nodes)], dtype=float)
        self.node_active = np.array([nd.active for nd in snapshot.nodes], dtype=bool)
        edges = snapshot.edges
        self.n_edges = len(edges)
        self.edge_src = np.array([self.index[e.src] for e in edges], dtype=np.int64)
        self.edge_dst = np.array([self.index[e.dst] for e in edges], dtype=np.int64)
        self.edge_capacity = np.array([e.capacity for e in edges], dtype=float)
        self.edge_delay = np.array([e.delay for e in edges], dtype=float)
        self.edge_kind = [e.kind for e in edges]
        self.pair_edge = {}
        for k in range(self.n_edges):
            a, b = int(self.edge_src[k]), int(self.edge_dst[k])
            self.pair_edge[(a, b)] = k
            self.pair_edge[(b, a)] = k
        # directed arcs in CSR order; users only originate, gateways only terminate
        rows = np.concatenate([self.edge_src, self.edge_dst])
        cols = np.concatenate([self.edge_dst, self.edge_src])
        eids = np.concatenate([np.arange(self.n_edges), np.arange(self.n_edges)])
        keep = (~self.is_user[cols] & ~self.is_gateway[rows]) if n else np.zeros(0, dtype=bool)
        # a beam is only ever crossed inward from users or outward to gateways
        kind_code = np.array([_KIND_CODE[k] for k in self.kinds], dtype=np.int8)
        sat, ub, fb = (_KIND_CODE[k] for k in (NodeKind.SATELLITE, NodeKind.USER_BEAM,
                                               NodeKind.FEEDER_BEAM))
        if n:
            keep &= ~((kind_code[rows] == sat) & (kind_code[cols] == ub))
            keep &= ~((kind_code[rows] == fb) & (kind_code[cols] == sat))
        rows, cols, eids = rows[keep], cols[keep], eids[keep]
        # only nodes on some user -> gateway walk can carry traffic
        routable = (_reach(n, rows, cols, self.is_user)
                    & _reach(n, cols, rows, self.is_gateway))
        keep = routable[rows] & routable[cols]
        rows, cols, eids = rows[keep], cols[keep], eids[keep]
        self.routable = routable
        self.compact_nodes = np.flatnonzero(routable)
        self.compact_index = np.full(n, -1, dtype=np.int64)
        self.compact_index[self.compact_nodes] = np.arange(len(self.compact_nodes))
        self.compact_is_gateway = self.is_gateway[self.compact_nodes]
        order = np.lexsort((cols, rows))
        self.arc_row = rows[order]
        self.arc_col = cols[order]
        self.arc_edge = eids[order]
        m = len(self.compact_nodes)
        self.indptr = np.zeros(m + 1, dtype=np.int64)
        np.add.at(self.indptr, self.compact_index[self.arc_row] + 1, 1)
        self.indptr = np.cumsum(self.indptr)
        self.compact_col = self.compact_index[self.arc_col]
        # node -> incident edges (CSR)
        inc_nodes = np.concatenate([self.edge_src, self.edge_dst])
        inc_edges = np.concatenate([np.arange(self.n_edges), np.arange(self.n_edges)])
        o = np.argsort(inc_nodes, kind="stable")
        self.inc_edges = inc_edges[o]
        self.inc_ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self.inc_ptr, inc_nodes + 1, 1)
        self.inc_ptr = np.cumsum(self.inc_ptr)
        self.parent = np.full(n, -1, dtype=np.int64)
        for i, nd in enumerate(snapshot.nodes):
            if nd.parent is not None and nd.parent in self.index:
                self.parent[i] = self.index[nd.parent]

    @classmethod
    def of(cls, snapshot: Snapshot) -> "RoutingGraph":
        cached = snapshot.__dict__.get("_routing_graph")
        if cached is None:
            cached = cls(snapshot)
            snapshot.__dict__["_routing_graph"] = cached
        return cached

    @cached_property
    def children(self) -> list[np.ndarray]:
        kids: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for i, p in enumerate(self.parent):
            if p >= 0:
                kids[p].append(i)
        return [np.array(k, dtype=np.int64) for k in kids]

    def incident(self, node: int) -> np.ndarray:
        return self.inc_edges[self.inc_ptr[node]:self.inc_ptr[node + 1]]


@dataclass
class LoadState:
    node_load: np.ndarray
    edge_load: np.ndarray

    @classmethod
    def zeros(cls, graph: RoutingGraph) -> "LoadState":
        return cls(np.zeros(graph.n_nodes), np.zeros(graph.n_edges))

    def copy(self) -> "LoadState":
        return LoadState(self.node_load.copy(), self.edge_load.copy())

    def node_map(self, graph: RoutingGraph) -> dict[str, float]:
        return {graph.ids[i]: float(v) for i, v in enumerate(self.node_load)}


@dataclass
class RoutedFlow:
    flow: Flow
    nodes: np.ndarray | None  # node indices user -> gateway, None when unserved
    edges: np.ndarray | None
    gateway: str | None = None
    path: tuple[str, ...] | None = field(default=None)

    @property
    def served(self) -> bool:
        return self.nodes is not None


@dataclass(frozen=True)
class RouteOptions:
    delta: float = DEFAULT_DELTA
    eps: float = EPS
    rehome: bool = True


def arc_weights(graph: RoutingGraph, edge_load: np.ndarray, edge_capacity: np.ndarray,
                removed: np.ndarray | None, opts: RouteOptions) -> np.ndarray:
    residual = edge_capacity - edge_load
    usable = residual > opts.eps
    with np.errstate(divide="ignore"):
        w_edge = np.where(usable, 1.0 / np.where(usable, residual, 1.0)
                          + opts.delta * graph.edge_delay, np.inf)
    w = w_edge[graph.arc_edge]
    if removed is not None and removed.any():
        w = np.where(removed[graph.arc_row] | removed[graph.arc_col], np.inf, w)
    return w


def _shortest(graph: RoutingGraph, weights: np.ndarray, src: int):
    """Distances and predecessors over the compact routable node set."""
    m = len(graph.compact_nodes)
    finite = np.isfinite(weights)
    if finite.all():
        mat = csr_matrix((weights, graph.compact_col, graph.indptr), shape=(m, m))
    else:
        # drop unusable arcs; arcs are row-sorted so the CSR layout survives filtering
        kept = np.concatenate([[0], np.cumsum(finite)])
        mat = csr_matrix((weights[finite], graph.compact_col[finite], kept[graph.indptr]),
                         shape=(m, m))
    return dijkstra(mat, directed=True, indices=src, return_predecessors=True)


def _trace(pred: np.ndarray, src: int, dst: int) -> list[int]:
    path = [dst]
    while path[-1] != src:
        p = int(pred[path[-1]])
        if p < 0:
            return []
        path.append(p)
    path.reverse()
    return path


def route_flow(graph: RoutingGraph, flow: Flow, loads: LoadState,
               opts: RouteOptions = RouteOptions(), edge_capacity: np.ndarray | None = None,
               removed: np.ndarray | None = None) -> RoutedFlow:
    """Minimum-weight path from the flow's user to its gateway.

    With ``opts.rehome`` a flow whose gateway is gone or unreachable goes to
    the cheapest reachable surviving gateway instead.
    """
    caps = graph.edge_capacity if edge_capacity is None else edge_capacity
    if not graph.node_active.all():
        removed = ~graph.node_active if removed is None else removed | ~graph.node_active
    src = graph.index.get(flow.user)
    dst = graph.index.get(flow.gateway)
    if src is None or (removed is not None and removed[src]) or not graph.routable[src]:
        return RoutedFlow(flow, None, None)
    w = arc_weights(graph, loads.edge_load, caps, removed, opts)
    dist, pred = _shortest(graph, w, graph.compact_index[src])
    cdst = graph.compact_index[dst] if dst is not None else -1
    target = None
    if cdst >= 0 and np.isfinite(dist[cdst]) and not (removed is not None and removed[dst]):
        target = cdst
    elif opts.rehome:
        alive = graph.compact_is_gateway & np.isfinite(dist)
        if removed is not None:
            alive &= ~removed[graph.compact_nodes]
        cands = np.flatnonzero(alive)
        if len(cands):
            # cheapest first; compact order follows node id order
            target = int(cands[np.argmin(dist[cands])])
    if target is None:
        return RoutedFlow(flow, None, None)
    cpath = _trace(pred, int(graph.compact_index[src]), target)
    if not cpath:
        return RoutedFlow(flow, None, None)
    nodes = [int(graph.compact_nodes[c]) for c in cpath]
    target = nodes[-1]
    edges = [graph.pair_edge[(a, b)] for a, b in zip(nodes[:-1], nodes[1:])]
    node_arr = np.array(nodes, dtype=np.int64)
    return RoutedFlow(flow, node_arr, np.array(edges, dtype=np.int64),
                      gateway=graph.ids[target], path=tuple(graph.ids[i] for i in nodes))


def routing_order(flows: list[Flow]) -> list[Flow]:
    return sorted(flows, key=lambda f: (-f.demand, f.id))


def add_flow_load(loads: LoadState, rf: RoutedFlow, sign: float = 1.0):
    if rf.served:
        loads.node_load[rf.nodes] += sign * rf.flow.demand
        loads.edge_load[rf.edges] += sign * rf.flow.demand


def route_all(snapshot_or_graph, flows: list[Flow], opts: RouteOptions = RouteOptions(),
              edge_capacity: np.ndarray | None = None, removed: np.ndarray | None = None,
              loads: LoadState | None = None) -> tuple[list[RoutedFlow], LoadState]:
    """Sequential load-aware filling in descending-demand, then id, order."""
    graph = (snapshot_or_graph if isinstance(snapshot_or_graph, RoutingGraph)
             else RoutingGraph.of(snapshot_or_graph))
    loads = LoadState.zeros(graph) if loads is None else loads
    routed = []
    for f in routing_order(flows):
        rf = route_flow(graph, f, loads, opts, edge_capacity, removed)
        add_flow_load(loads, rf)
        routed.append(rf)
    return routed, loads


def accumulate_loads(graph: RoutingGraph, routed: list[RoutedFlow]) -> LoadState:
    """Recount node and edge loads from the paths of served flows."""
    loads = LoadState.zeros(graph)
    for rf in routed:
        if rf.path is None:
            continue
        try:
            idx = [graph.index[n] for n in rf.path]
        except KeyError as exc:
            raise IntegrityError(f"path of {rf.flow.id} references unknown node {exc}") from None
        for a, b in zip(idx[:-1], idx[1:]):
            k = graph.pair_edge.get((a, b))
            if k is None:
                raise IntegrityError(f"path of {rf.flow.id} uses missing edge")
            loads.edge_load[k] += rf.flow.demand
        for i in idx:
            loads.node_load[i] += rf.flow.demand
    return loads
