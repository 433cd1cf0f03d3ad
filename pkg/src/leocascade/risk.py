"""Risk metrics over cascade outcomes: failure hypergraph, CFR, HBC and baselines."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import networkx as nx
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .cascade import CascadeResult
from .errors import DomainError
from .orbital import subpoint_array
from .topology import EdgeKind, NodeKind, RISK_KINDS, Snapshot

# Marker for an undefined value (empty conditional mean, zero variance,
# degree-0 node). Kept as None so it serialises to an empty CSV field.
UNDEFINED = None

HBC_KINDS = (NodeKind.SATELLITE, NodeKind.GATEWAY, NodeKind.FEEDER_BEAM, NodeKind.USER_BEAM)


@dataclass(frozen=True)
class Hyperedge:
    run_id: int
    initial: frozenset[str]
    final: frozenset[str]


@dataclass
class FailureHypergraph:
    vertices: frozenset[str]
    hyperedges: list[Hyperedge] = field(default_factory=list)

    def sizes(self) -> list[int]:
        return [len(h.final) for h in self.hyperedges]


def build_failure_hypergraph(results: Iterable, vertices: Iterable[str] = ()) -> FailureHypergraph:
    """One hyperedge per run, in run order.

    ``results`` holds ``CascadeResult`` objects or ``(F0, F_final)`` pairs.
    Vertices are ``vertices`` plus every node seen in any run.
    """
    edges = []
    seen = set(vertices)
    for k, r in enumerate(results):
        if isinstance(r, CascadeResult):
            f0, ff = r.initial_set, r.final_set
        else:
            f0, ff = r
            if isinstance(ff, CascadeResult):
                ff = ff.final_set
        f0, ff = frozenset(f0), frozenset(ff)
        if not f0 <= ff:
            ff = ff | f0
        seen |= ff
        edges.append(Hyperedge(k, f0, ff))
    return FailureHypergraph(frozenset(seen), edges)


def cfr(h: FailureHypergraph, v: str, n_risk: int) -> float | None:
    """Mean failed fraction over runs whose initial set contains ``v``."""
    if n_risk <= 0:
        raise DomainError("n_risk must be positive")
    fractions = [len(e.final) / n_risk for e in h.hyperedges if v in e.initial]
    if not fractions:
        return UNDEFINED
    return math.fsum(fractions) / len(fractions)


def cfr_table(h: FailureHypergraph, n_risk: int) -> tuple[dict[str, float], dict[str, int]]:
    """CFR and trial count for every node that appears in some initial set."""
    if n_risk <= 0:
        raise DomainError("n_risk must be positive")
    acc: dict[str, list[float]] = defaultdict(list)
    for e in h.hyperedges:
        frac = len(e.final) / n_risk
        for v in e.initial:
            acc[v].append(frac)
    return ({v: math.fsum(xs) / len(xs) for v, xs in acc.items()},
            {v: len(xs) for v, xs in acc.items()})


def hbc(cfr_value: float | None, degree_phy: int, base: float = math.e) -> float | None:
    """CFR / log(1 + degree); undefined for degree 0 or undefined CFR."""
    if cfr_value is None or degree_phy < 1:
        return UNDEFINED
    return cfr_value / (math.log(1.0 + degree_phy) / math.log(base))


def _nx_graph(snapshot: Snapshot) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(n.id for n in snapshot.nodes)
    g.add_edges_from((e.src, e.dst) for e in snapshot.edges)
    return g


def pagerank(snapshot_or_graph, damping: float = 0.85, tol: float = 1e-9,
             max_iter: int = 1000) -> dict[str, float]:
    """Power-iteration PageRank on the undirected graph.

    Dangling mass is spread uniformly. Iterates until the L1 change is
    below ``tol`` per node.
    """
    if isinstance(snapshot_or_graph, Snapshot):
        ids = [n.id for n in snapshot_or_graph.nodes]
        index = snapshot_or_graph.index
        pairs = [(index[e.src], index[e.dst]) for e in snapshot_or_graph.edges]
    else:
        ids = sorted(snapshot_or_graph.nodes)
        index = {v: i for i, v in enumerate(ids)}
        pairs = [(index[a], index[b]) for a, b in snapshot_or_graph.edges if a != b]
    n = len(ids)
    if n == 0:
        raise DomainError("pagerank of an empty graph")
    if pairs:
        r, c = np.array(pairs).T
        rows, cols = np.concatenate([r, c]), np.concatenate([c, r])
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
    adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
    adj.data[:] = 1.0  # collapse parallel edges
    out_deg = np.asarray(adj.sum(axis=1)).ravel()
    dangling = out_deg == 0
    inv = np.where(dangling, 0.0, 1.0 / np.where(dangling, 1.0, out_deg))
    transition = adj.T.tocsr()  # column j spreads x_j / deg_j to neighbours
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        spread = transition @ (x * inv)
        new = damping * (spread + x[dangling].sum() / n) + (1.0 - damping) / n
        new /= new.sum()
        if np.abs(new - x).sum() < n * tol:
            x = new
            break
        x = new
    return {ids[i]: float(x[i]) for i in range(n)}


def betweenness(snapshot_or_graph, sample: int | None = None, seed: int = 0) -> dict[str, float]:
    """Normalised Brandes betweenness; ``sample`` pivots give the approximation."""
    g = _nx_graph(snapshot_or_graph) if isinstance(snapshot_or_graph, Snapshot) else snapshot_or_graph
    return nx.betweenness_centrality(g, k=sample, normalized=True, seed=seed)


@dataclass
class Centralities:
    degree: dict[str, int]
    betweenness: dict[str, float]
    pagerank: dict[str, float]


def centralities(snapshot: Snapshot, damping: float = 0.85, tol: float = 1e-9,
                 approx_above: int = 20_000, sample: int = 2_000) -> Centralities:
    """Physical degree, betweenness and PageRank over the whole snapshot graph."""
    if not snapshot.nodes:
        raise DomainError("centralities of an empty snapshot")
    g = _nx_graph(snapshot)
    k = sample if g.number_of_nodes() > approx_above else None
    return Centralities(
        degree={n.id: snapshot.physical_degree(n.id) for n in snapshot.nodes},
        betweenness=betweenness(g, sample=k),
        pagerank=pagerank(snapshot, damping, tol),
    )


def pearson(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Sample Pearson coefficient; undefined when either side has zero variance."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("pearson needs two vectors of equal length")
    if len(x) < 2:
        raise DomainError("pearson needs at least two samples")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx <= 0.0 or syy <= 0.0:
        return UNDEFINED
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def giant_component_ratio(snapshot: Snapshot, removed: Iterable[str] = ()) -> float:
    """Largest connected component over surviving risk-eligible nodes."""
    gone = set(removed)
    keep = [n.id for n in snapshot.nodes if n.kind in RISK_KINDS and n.id not in gone]
    if not keep:
        raise DomainError("no risk-eligible nodes")
    local = {v: i for i, v in enumerate(keep)}
    pairs = [(local[e.src], local[e.dst]) for e in snapshot.edges
             if e.src in local and e.dst in local]
    n = len(keep)
    if pairs:
        r, c = np.array(pairs).T
    else:
        r = c = np.zeros(0, dtype=np.int64)
    mat = coo_matrix((np.ones(len(r)), (r, c)), shape=(n, n))
    _, labels = connected_components(mat, directed=False)
    return float(np.bincount(labels).max()) / n


def gcr_of_edges(nodes: Sequence[str], edges: Iterable[tuple[str, str]]) -> float:
    """GCR of a plain node/edge list."""
    g = nx.Graph()
    g.add_nodes_from(nodes)
    g.add_edges_from(edges)
    if g.number_of_nodes() == 0:
        raise DomainError("empty graph")
    return max(len(c) for c in nx.connected_components(g)) / g.number_of_nodes()


def systemic_risk(snapshot: Snapshot, edge_load: Sequence[float]) -> float:
    """Fraction of non-Internal edges whose load exceeds capacity.

    ``edge_load`` is aligned with ``snapshot.edges``.
    """
    over = total = 0
    for e, load in zip(snapshot.edges, edge_load):
        if e.kind == EdgeKind.INTERNAL:
            continue
        total += 1
        over += load > e.capacity
    return over / total if total else 0.0


def nearest_rank(values: Sequence[float], pct: float) -> float:
    """Nearest-rank percentile: the ceil(pct/100 * n)-th smallest value."""
    if not values:
        raise DomainError("percentile of an empty sample")
    if not 0.0 <= pct <= 100.0:
        raise DomainError(f"percentile {pct} outside [0, 100]")
    ordered = sorted(values)
    rank = max(1, math.ceil(pct / 100.0 * len(ordered)))
    return ordered[rank - 1]


@dataclass
class NodeRisk:
    node_id: str
    kind: NodeKind
    lat: float
    lon: float
    degree: int
    betweenness: float
    pagerank: float
    cfr: float | None
    hbc: float | None
    trial_count: int
    black_swan: bool = False


@dataclass
class RiskReport:
    time: str
    rows: list[NodeRisk]

    def by_id(self) -> dict[str, NodeRisk]:
        return {r.node_id: r for r in self.rows}

    def mean_hbc_by_kind(self) -> dict[NodeKind, float | None]:
        acc: dict[NodeKind, list[float]] = {k: [] for k in HBC_KINDS}
        for r in self.rows:
            if r.hbc is not None and r.kind in acc:
                acc[r.kind].append(r.hbc)
        return {k: (math.fsum(v) / len(v) if v else UNDEFINED) for k, v in acc.items()}


def detect_black_swans(rows: Sequence[NodeRisk], delta_pct: float = 20.0,
                       tau_pct: float = 90.0) -> set[str]:
    """Nodes with degree below the delta percentile and HBC above the tau percentile."""
    ranked = [r for r in rows if r.hbc is not None]
    if not ranked:
        return set()
    d_cut = nearest_rank([r.degree for r in rows], delta_pct)
    h_cut = nearest_rank([r.hbc for r in ranked], tau_pct)
    return {r.node_id for r in ranked if r.degree < d_cut and r.hbc > h_cut}


def node_latlon(n) -> tuple[float, float]:
    """Ground coordinates; space nodes use their sub-satellite point."""
    if n.geodetic:
        return float(n.geodetic[0]), float(n.geodetic[1])
    lat, lon = subpoint_array(np.asarray(n.position, dtype=float))
    return float(lat), float(lon)


def build_report(snapshot: Snapshot, h: FailureHypergraph, cent: Centralities | None = None,
                 delta_pct: float = 20.0, tau_pct: float = 90.0, time: str = "") -> RiskReport:
    n_risk = sum(1 for n in snapshot.nodes if n.kind in RISK_KINDS)
    cfrs, counts = cfr_table(h, n_risk) if n_risk else ({}, {})
    cent = cent or centralities(snapshot)
    rows = []
    for n in snapshot.nodes:
        if n.kind not in RISK_KINDS:
            continue
        deg = cent.degree[n.id]
        c = cfrs.get(n.id)
        lat, lon = node_latlon(n)
        rows.append(NodeRisk(n.id, n.kind, lat, lon, deg, cent.betweenness.get(n.id, 0.0),
                             cent.pagerank.get(n.id, 0.0), c, hbc(c, deg),
                             counts.get(n.id, 0)))
    swans = detect_black_swans(rows, delta_pct, tau_pct)
    for r in rows:
        r.black_swan = r.node_id in swans
    return RiskReport(time, rows)


def cir(result: CascadeResult, n_attacked: int, n_total: int) -> tuple[float, float]:
    """(leverage, network fraction) of one cascade."""
    if n_attacked < 1:
        raise DomainError("n_attacked must be at least 1")
    if n_total < 1:
        raise DomainError("n_total must be at least 1")
    failed = len(result.final_set)
    return failed / n_attacked, failed / n_total


@dataclass
class TimeseriesPoint:
    time: str
    gcr: float
    systemic_risk: float
    mean_hbc_by_kind: dict[NodeKind, float | None]
