"""Per-timestep multi-layer snapshot: active satellites, beams, links, capacities."""

from __future__ import annotations

import csv
import dataclasses
import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError, DomainError, InputDataError, IntegrityError
from .orbital import (
    SPEED_OF_LIGHT,
    EpochTime,
    azimuth_deg,
    elevation_array,
    enu_basis,
    geodetic_to_ecef_array,
    line_of_sight_array,
    subpoint_array,
)


class NodeKind(str, Enum):
    SATELLITE = "satellite"
    USER_BEAM = "userbeam"
    FEEDER_BEAM = "feederbeam"
    GATEWAY = "gateway"
    USER = "user"


class EdgeKind(str, Enum):
    ISL = "isl"
    FEEDER = "feeder"
    ACCESS = "access"
    INTERNAL = "internal"


BEAM_KINDS = frozenset({NodeKind.USER_BEAM, NodeKind.FEEDER_BEAM})
RISK_KINDS = frozenset(NodeKind) - {NodeKind.USER}

_EDGE_ENDPOINTS = {
    EdgeKind.ISL: {frozenset({NodeKind.SATELLITE})},
    EdgeKind.FEEDER: {frozenset({NodeKind.FEEDER_BEAM, NodeKind.GATEWAY})},
    EdgeKind.ACCESS: {frozenset({NodeKind.USER_BEAM, NodeKind.USER})},
    EdgeKind.INTERNAL: {frozenset({NodeKind.USER_BEAM, NodeKind.SATELLITE}),
                        frozenset({NodeKind.FEEDER_BEAM, NodeKind.SATELLITE})},
}


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    geodetic: tuple[float, float, float] | None = None
    capacity: float = 0.0
    hardware_cap: float | None = None
    parent: str | None = None
    active: bool = True
    # user/ground attributes
    pop_weight: float = 0.0
    beta: float = 0.0
    site: str = ""


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    kind: EdgeKind
    capacity: float
    delay: float
    length: float

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.kind.value, self.src, self.dst)


@dataclass(frozen=True)
class TopologyConfig:
    isl_max_km: float = 5000.0
    isl_k_max: int = 4
    min_elevation_deg: float = 25.0
    ground_max_km: float = 3000.0
    grazing_margin_km: float = 80.0
    beams_per_sat: int = 12
    user_top_k: int = 3
    gateway_top_k: int = 3
    expand: bool = True
    expand_hops: int = 2
    merge_feeder_beams: bool = False


@dataclass(frozen=True)
class CapacityConfig:
    """Capacities in Mbps. Node values are per-kind; satellites use the hardware cap."""

    isl: float = 40_000.0
    feeder: float = 2_000.0
    access: float = 2_000.0
    user_beam: float = 2_000.0
    feeder_beam: float = 2_000.0
    gateway: float = 50_000.0
    sat_hardware: float = 200_000.0


@dataclass
class Snapshot:
    """Immutable multi-layer graph at one instant. Nodes and edges are sorted."""

    time: EpochTime
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self):
        self.nodes = tuple(sorted(self.nodes, key=lambda n: n.id))
        self.edges = tuple(sorted(self.edges, key=lambda e: e.key))

    @cached_property
    def index(self) -> dict[str, int]:
        return {n.id: i for i, n in enumerate(self.nodes)}

    def node(self, node_id: str) -> Node:
        return self.nodes[self.index[node_id]]

    @cached_property
    def adjacency(self) -> dict[str, list[int]]:
        """Node id -> indices of incident edges."""
        adj: dict[str, list[int]] = defaultdict(list)
        for k, e in enumerate(self.edges):
            adj[e.src].append(k)
            adj[e.dst].append(k)
        return dict(adj)

    @cached_property
    def children(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = defaultdict(list)
        for n in self.nodes:
            if n.parent is not None:
                out[n.parent].append(n.id)
        return dict(out)

    def ids_of_kind(self, kind: NodeKind) -> list[str]:
        return [n.id for n in self.nodes if n.kind == kind]

    def risk_node_ids(self) -> list[str]:
        return [n.id for n in self.nodes if n.kind in RISK_KINDS]

    def physical_degree(self, node_id: str) -> int:
        return sum(1 for k in self.adjacency.get(node_id, ())
                   if self.edges[k].kind != EdgeKind.INTERNAL)

    def neighbors(self, node_id: str) -> list[str]:
        out = []
        for k in self.adjacency.get(node_id, ()):
            e = self.edges[k]
            out.append(e.dst if e.src == node_id else e.src)
        return out

    def validate(self, cfg: TopologyConfig | None = None, strict_kinds: bool = True):
        """Raise IntegrityError if a structural invariant is broken."""
        index = self.index
        if len(index) != len(self.nodes):
            raise IntegrityError("duplicate node ids")
        seen = set()
        for e in self.edges:
            if e.src not in index or e.dst not in index:
                raise IntegrityError(f"dangling edge {e.src}-{e.dst}")
            if e.src == e.dst:
                raise IntegrityError(f"self loop on {e.src}")
            pair = (e.kind, frozenset((e.src, e.dst)))
            if pair in seen:
                raise IntegrityError(f"parallel {e.kind.value} edge {e.src}-{e.dst}")
            seen.add(pair)
            if e.capacity <= 0:
                raise IntegrityError(f"non-positive capacity on {e.src}-{e.dst}")
            if strict_kinds:
                kinds = frozenset({self.node(e.src).kind, self.node(e.dst).kind})
                if kinds not in _EDGE_ENDPOINTS[e.kind]:
                    raise IntegrityError(f"{e.kind.value} edge joins {sorted(kinds)}")
                if e.kind == EdgeKind.INTERNAL:
                    beam = e.src if self.node(e.src).kind in BEAM_KINDS else e.dst
                    other = e.dst if beam == e.src else e.src
                    if self.node(beam).parent != other:
                        raise IntegrityError(f"internal edge {beam} not to its parent")
                    if e.delay != 0:
                        raise IntegrityError("internal edges carry zero delay")
                elif not math.isclose(e.delay, e.length / SPEED_OF_LIGHT * 1000.0,
                                      rel_tol=1e-9, abs_tol=1e-12):
                    raise IntegrityError(f"delay/length mismatch on {e.src}-{e.dst}")
        for n in self.nodes:
            if n.kind in BEAM_KINDS and strict_kinds:
                if n.parent not in index or self.node(n.parent).kind != NodeKind.SATELLITE:
                    raise IntegrityError(f"beam {n.id} has no satellite parent")
        if cfg is not None:
            for n in self.nodes:
                if n.kind == NodeKind.SATELLITE:
                    isl = sum(1 for k in self.adjacency.get(n.id, ())
                              if self.edges[k].kind == EdgeKind.ISL)
                    if isl > cfg.isl_k_max:
                        raise IntegrityError(f"{n.id} has {isl} ISLs > {cfg.isl_k_max}")
                elif n.kind == NodeKind.USER:
                    sats = {self.node(b).parent for b in self.neighbors(n.id)}
                    if len(sats) > cfg.user_top_k:
                        raise IntegrityError(f"{n.id} reaches {len(sats)} satellites")


# ---------------------------------------------------------------------------
# Ground sites and users


@dataclass(frozen=True)
class GroundSite:
    name: str
    lat: float
    lon: float
    population_weight: float
    adoption_beta: float
    is_gateway: bool


def load_sites(path: str | Path | None = None) -> list[GroundSite]:
    """Read the city/gateway table (defaults to the packaged one)."""
    if path is None:
        text = resources.files("leocascade.data").joinpath("sites.csv").read_text("utf-8")
        source = "sites.csv"
    else:
        try:
            text = Path(path).read_text("utf-8")
        except OSError as exc:
            raise InputDataError(f"{path}: {exc}") from exc
        source = str(path)
    rows = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    sites = []
    for rec in csv.DictReader(rows):
        try:
            sites.append(GroundSite(
                name=rec["name"].strip(), lat=float(rec["lat"]), lon=float(rec["lon"]),
                population_weight=float(rec["population_weight"]),
                adoption_beta=float(rec["adoption_beta"]),
                is_gateway=rec["is_gateway"].strip().lower() in ("1", "true", "yes")))
        except (KeyError, ValueError) as exc:
            raise InputDataError(f"{source}: bad row {rec}: {exc}") from exc
    return sites


@dataclass(frozen=True)
class GroundNode:
    id: str
    kind: NodeKind
    lat: float
    lon: float
    pop_weight: float = 0.0
    beta: float = 0.0
    site: str = ""


def _allocate(total: int, weights: list[float]) -> list[int]:
    """Largest-remainder apportionment of ``total`` by weight."""
    wsum = sum(weights)
    if total <= 0 or wsum <= 0:
        return [0] * len(weights)
    quotas = [total * w / wsum for w in weights]
    counts = [int(math.floor(q)) for q in quotas]
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[: total - sum(counts)]:
        counts[i] += 1
    return counts


def spawn_users(sites: list[GroundSite], n_users: int, radius_km: float = 50.0,
                seed: int = 0) -> list[GroundNode]:
    """Place users uniformly in a disc around each city, count proportional to population.

    Each user carries an equal share of its city's population weight.
    """
    cities = [s for s in sites if s.population_weight > 0]
    counts = _allocate(n_users, [c.population_weight for c in cities])
    rng = np.random.default_rng(seed)
    users = []
    uid = 0
    width = max(4, len(str(max(n_users - 1, 0))))
    for city, count in zip(cities, counts):
        r = radius_km * np.sqrt(rng.random(count))
        theta = rng.random(count) * 2.0 * np.pi
        dlat = np.degrees(r * np.cos(theta) / 6371.0)
        dlon = np.degrees(r * np.sin(theta) / (6371.0 * max(math.cos(math.radians(city.lat)), 1e-6)))
        for k in range(count):
            lon = (city.lon + dlon[k] + 180.0) % 360.0 - 180.0
            users.append(GroundNode(id=f"U{uid:0{width}d}", kind=NodeKind.USER,
                                    lat=float(city.lat + dlat[k]), lon=float(lon),
                                    pop_weight=city.population_weight / count,
                                    beta=city.adoption_beta, site=city.name))
            uid += 1
    return users


def gateway_nodes(sites: list[GroundSite]) -> list[GroundNode]:
    gws = [s for s in sites if s.is_gateway]
    return [GroundNode(id=f"GW{i:02d}", kind=NodeKind.GATEWAY, lat=s.lat, lon=s.lon, site=s.name)
            for i, s in enumerate(gws)]


# ---------------------------------------------------------------------------
# Construction


@dataclass
class GroundGeometry:
    ecef: np.ndarray
    up: np.ndarray
    elevation: np.ndarray  # (G, S) degrees
    distance: np.ndarray  # (G, S) km

    @classmethod
    def compute(cls, ground: list[GroundNode], sat_pos: np.ndarray) -> "GroundGeometry":
        if not ground:
            return cls(np.zeros((0, 3)), np.zeros((0, 3)),
                       np.zeros((0, len(sat_pos))), np.zeros((0, len(sat_pos))))
        lat = np.array([g.lat for g in ground])
        lon = np.array([g.lon for g in ground])
        ecef = geodetic_to_ecef_array(lat, lon, 0.0)
        _, _, up = enu_basis(lat, lon)
        el = elevation_array(ecef, up, sat_pos)
        dist = np.linalg.norm(sat_pos[None, :, :] - ecef[:, None, :], axis=-1)
        return cls(ecef, up, el, dist)

    def visible(self, cfg: TopologyConfig) -> np.ndarray:
        return (self.elevation >= cfg.min_elevation_deg) & (self.distance <= cfg.ground_max_km)


@dataclass
class ActiveSelection:
    active: set[int]
    user_sats: list[list[int]]  # per user, ranked satellite indices (top-K)
    feeder_pairs: list[tuple[int, int]]  # (satellite index, gateway index)


def _rank(candidates: np.ndarray, primary: np.ndarray, secondary: np.ndarray) -> np.ndarray:
    # lexsort: last key is primary; ascending everywhere
    return candidates[np.lexsort((candidates, secondary[candidates], primary[candidates]))]


def knn_neighbors(sat_pos: np.ndarray, k: int, max_km: float, margin_km: float,
                  tree: cKDTree | None = None) -> list[list[int]]:
    """For every satellite, up to ``k`` nearest LoS-visible satellites within range."""
    n = len(sat_pos)
    if n < 2 or k <= 0:
        return [[] for _ in range(n)]
    tree = tree or cKDTree(sat_pos)
    kq = min(n, k + 1)
    dist, idx = tree.query(sat_pos, k=kq, distance_upper_bound=max_km)
    dist = np.atleast_2d(dist).reshape(n, kq)
    idx = np.atleast_2d(idx).reshape(n, kq)
    out: list[list[int]] = []
    for i in range(n):
        row = [(float(d), int(j)) for d, j in zip(dist[i], idx[i])
               if j != i and j < n and np.isfinite(d) and d <= max_km]
        row.sort()
        if row:
            js = np.array([j for _, j in row])
            ok = line_of_sight_array(np.repeat(sat_pos[i][None, :], len(js), 0), sat_pos[js],
                                     margin_km)
            row = [r for r, good in zip(row, ok) if good]
        out.append([j for _, j in row[:k]])
    return out


def select_active_satellites(sat_pos: np.ndarray, users: GroundGeometry,
                             gateways: GroundGeometry, cfg: TopologyConfig,
                             sat_ids: list[str] | None = None) -> ActiveSelection:
    """Active satellite selection: user top-K, gateway top-K_g, feeder assignment, expansion."""
    n_sat = len(sat_pos)
    order_key = np.arange(n_sat) if sat_ids is None else np.argsort(np.argsort(sat_ids))
    active: set[int] = set()
    user_sats: list[list[int]] = []
    uvis = users.visible(cfg)
    for u in range(len(users.elevation)):
        cand = np.flatnonzero(uvis[u])
        if len(cand):
            # elevation descending, then distance ascending, then id
            ranked = cand[np.lexsort((order_key[cand], users.distance[u, cand],
                                      -users.elevation[u, cand]))]
            chosen = [int(s) for s in ranked[: cfg.user_top_k]]
        else:
            chosen = []
        user_sats.append(chosen)
        active.update(chosen)
    gvis = gateways.visible(cfg)
    for g in range(len(gateways.elevation)):
        cand = np.flatnonzero(gvis[g])
        if len(cand):
            ranked = cand[np.lexsort((order_key[cand], gateways.distance[g, cand]))]
            active.update(int(s) for s in ranked[: cfg.gateway_top_k])
    feeder_pairs = []
    for s in sorted(active, key=lambda s: order_key[s]):
        for g in np.flatnonzero(gvis[:, s]) if len(gvis) else ():
            feeder_pairs.append((s, int(g)))
    if cfg.expand and cfg.expand_hops > 0 and active:
        neigh = knn_neighbors(sat_pos, cfg.isl_k_max, cfg.isl_max_km, cfg.grazing_margin_km)
        frontier = set(active)
        for _ in range(cfg.expand_hops):
            nxt = {j for i in frontier for j in neigh[i]} - active
            if not nxt:
                break
            active |= nxt
            frontier = nxt
    return ActiveSelection(active=active, user_sats=user_sats, feeder_pairs=feeder_pairs)


def beam_sector(azimuth: float, beams_per_sat: int) -> int:
    """Sector index for an azimuth measured clockwise from true north."""
    width = 360.0 / beams_per_sat
    return int(math.floor((azimuth % 360.0) / width)) % beams_per_sat


def _delay(length_km: float) -> float:
    return length_km / SPEED_OF_LIGHT * 1000.0


def user_beam_id(sat_id: str, sector: int) -> str:
    return f"{sat_id}/B{sector:02d}"


def feeder_beam_id(sat_id: str, gw_id: str) -> str:
    return f"{sat_id}/F{gw_id}"


def instantiate_beams(active_ids: list[str], sat_pos: dict[str, np.ndarray],
                      feeder_pairs: list[tuple[str, str]], cfg: TopologyConfig):
    """UserBeam sectors for every active satellite plus one FeederBeam per feeder pair.

    Returns (beam nodes, internal edges).
    """
    nodes, edges = [], []
    for sid in active_ids:
        pos = tuple(float(v) for v in sat_pos[sid])
        for k in range(cfg.beams_per_sat):
            bid = user_beam_id(sid, k)
            nodes.append(Node(id=bid, kind=NodeKind.USER_BEAM, position=pos, parent=sid))
            edges.append(Edge(bid, sid, EdgeKind.INTERNAL, 1.0, 0.0, 0.0))
    for sid, gid in feeder_pairs:
        pos = tuple(float(v) for v in sat_pos[sid])
        fid = feeder_beam_id(sid, gid)
        nodes.append(Node(id=fid, kind=NodeKind.FEEDER_BEAM, position=pos, parent=sid))
        edges.append(Edge(fid, sid, EdgeKind.INTERNAL, 1.0, 0.0, 0.0))
    return nodes, edges


def build_isl_mesh(ids: list[str], positions: np.ndarray, cfg: TopologyConfig) -> list[Edge]:
    """Greedy shortest-first mutual k-NN mesh; every satellite ends with <= k_max ISLs."""
    n = len(ids)
    if n < 2:
        return []
    neigh = knn_neighbors(positions, cfg.isl_k_max, cfg.isl_max_km, cfg.grazing_margin_km)
    proposals = {}
    for i, js in enumerate(neigh):
        for j in js:
            a, b = (i, j) if ids[i] < ids[j] else (j, i)
            proposals[(a, b)] = float(np.linalg.norm(positions[a] - positions[b]))
    degree = [0] * n
    edges = []
    for (a, b), length in sorted(proposals.items(), key=lambda kv: (kv[1], ids[kv[0][0]],
                                                                     ids[kv[0][1]])):
        if degree[a] < cfg.isl_k_max and degree[b] < cfg.isl_k_max:
            degree[a] += 1
            degree[b] += 1
            edges.append(Edge(ids[a], ids[b], EdgeKind.ISL, 1.0, _delay(length), length))
    return edges


def assign_capacities(snapshot: Snapshot, caps: CapacityConfig) -> Snapshot:
    """Fill node and edge capacities from the per-kind configuration.

    A satellite's capacity is min(hardware cap, sum of its physical link
    capacities), counting its ISLs and the feeder links of its feeder beams.
    A satellite with no such links gets capacity 0 and is marked inactive.
    """
    for name in ("isl", "feeder", "access", "user_beam", "feeder_beam", "gateway", "sat_hardware"):
        if getattr(caps, name, None) is None:
            raise ConfigError(f"capacity.{name}", "missing")
    node_cap = {NodeKind.USER_BEAM: caps.user_beam, NodeKind.FEEDER_BEAM: caps.feeder_beam,
                NodeKind.GATEWAY: caps.gateway, NodeKind.USER: math.inf}
    edge_cap = {EdgeKind.ISL: caps.isl, EdgeKind.FEEDER: caps.feeder, EdgeKind.ACCESS: caps.access}
    by_id = {n.id: n for n in snapshot.nodes}
    new_edges = []
    phys_sum: dict[str, float] = defaultdict(float)
    for e in snapshot.edges:
        if e.kind == EdgeKind.INTERNAL:
            beam = by_id[e.src] if by_id[e.src].kind in BEAM_KINDS else by_id[e.dst]
            cap = node_cap.get(beam.kind, caps.user_beam)
        else:
            cap = edge_cap[e.kind]
        new_edges.append(dataclasses.replace(e, capacity=cap))
        if e.kind == EdgeKind.ISL:
            phys_sum[e.src] += cap
            phys_sum[e.dst] += cap
        elif e.kind == EdgeKind.FEEDER:
            for end in (e.src, e.dst):
                n = by_id[end]
                if n.kind == NodeKind.FEEDER_BEAM and n.parent is not None:
                    phys_sum[n.parent] += cap
    new_nodes = []
    for n in snapshot.nodes:
        if n.kind == NodeKind.SATELLITE:
            cap = min(caps.sat_hardware, phys_sum.get(n.id, 0.0))
            new_nodes.append(dataclasses.replace(n, capacity=cap, hardware_cap=caps.sat_hardware,
                                                 active=cap > 0))
        else:
            new_nodes.append(dataclasses.replace(n, capacity=node_cap[n.kind]))
    return Snapshot(time=snapshot.time, nodes=tuple(new_nodes), edges=tuple(new_edges))


def build_snapshot(t: EpochTime, sat_ids: list[str], sat_pos: np.ndarray,
                   users: list[GroundNode], gateways: list[GroundNode],
                   cfg: TopologyConfig = TopologyConfig(),
                   caps: CapacityConfig = CapacityConfig()) -> Snapshot:
    """Compose selection, beams, ISL mesh, access and feeder links, then capacities."""
    sat_pos = np.asarray(sat_pos, dtype=float).reshape(-1, 3)
    ugeo = GroundGeometry.compute(users, sat_pos)
    ggeo = GroundGeometry.compute(gateways, sat_pos)
    sel = select_active_satellites(sat_pos, ugeo, ggeo, cfg, sat_ids)
    active = sorted(sel.active, key=lambda i: sat_ids[i])
    active_ids = [sat_ids[i] for i in active]
    pos_by_id = {sat_ids[i]: sat_pos[i] for i in active}

    nodes: list[Node] = []
    edges: list[Edge] = []
    for sid in active_ids:
        nodes.append(Node(id=sid, kind=NodeKind.SATELLITE,
                          position=tuple(float(v) for v in pos_by_id[sid])))
    feeder_pairs = [(sat_ids[s], gateways[g].id) for s, g in sel.feeder_pairs]
    beam_nodes, internal = instantiate_beams(active_ids, pos_by_id, feeder_pairs, cfg)
    nodes += beam_nodes
    edges += internal
    edges += build_isl_mesh(active_ids, sat_pos[active] if active else np.zeros((0, 3)), cfg)

    for g, gw in enumerate(gateways):
        nodes.append(Node(id=gw.id, kind=NodeKind.GATEWAY, position=tuple(ggeo.ecef[g]),
                          geodetic=(gw.lat, gw.lon, 0.0), site=gw.site))
    gidx = {gw.id: g for g, gw in enumerate(gateways)}
    sidx = {sid: i for i, sid in enumerate(sat_ids)}
    for sid, gid in feeder_pairs:
        length = float(ggeo.distance[gidx[gid], sidx[sid]])
        edges.append(Edge(feeder_beam_id(sid, gid), gid, EdgeKind.FEEDER, 1.0,
                          _delay(length), length))

    if active:
        sub_lat, sub_lon = subpoint_array(sat_pos)
    for u, user in enumerate(users):
        nodes.append(Node(id=user.id, kind=NodeKind.USER, position=tuple(ugeo.ecef[u]),
                          geodetic=(user.lat, user.lon, 0.0), pop_weight=user.pop_weight,
                          beta=user.beta, site=user.site))
        for s in sel.user_sats[u]:
            az = float(azimuth_deg(sub_lat[s], sub_lon[s], user.lat, user.lon))
            bid = user_beam_id(sat_ids[s], beam_sector(az, cfg.beams_per_sat))
            length = float(ugeo.distance[u, s])
            edges.append(Edge(user.id, bid, EdgeKind.ACCESS, 1.0, _delay(length), length))

    snap = Snapshot(time=t, nodes=tuple(nodes), edges=tuple(edges))
    return assign_capacities(snap, caps)


# ---------------------------------------------------------------------------
# Link budget


def shannon_capacity(bandwidth_mhz: float, snr: float) -> float:
    """Shannon-Hartley capacity in Mbps for a bandwidth in MHz."""
    if bandwidth_mhz <= 0 or snr < 0:
        raise DomainError("bandwidth must be positive and snr non-negative")
    return bandwidth_mhz * math.log2(1.0 + snr)


def link_snr(tx_power_w: float, gain_tx: float, gain_rx: float, noise_density: float,
             bandwidth_hz: float, distance_km: float, frequency_ghz: float) -> float:
    """Free-space link SNR (linear)."""
    args = (tx_power_w, gain_tx, gain_rx, noise_density, bandwidth_hz, distance_km, frequency_ghz)
    if any(a <= 0 for a in args):
        raise DomainError("link budget inputs must be positive")
    wavelength_factor = 4.0 * math.pi * distance_km * 1e3 * frequency_ghz * 1e9 / (SPEED_OF_LIGHT * 1e3)
    path_loss = wavelength_factor**2
    return tx_power_w * gain_tx * gain_rx / (noise_density * bandwidth_hz * path_loss)
