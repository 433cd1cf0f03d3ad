"""User-to-gateway demand: population, regional adoption and a diurnal evening peak."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DomainError
from .orbital import EpochTime
from .topology import EdgeKind, NodeKind, Snapshot

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Flow:
    user: str
    gateway: str
    demand: float

    @property
    def id(self) -> str:
        return self.user


@dataclass(frozen=True)
class DemandProfile:
    target_load: float = 0.7
    sigma_hours: float = 3.0
    floor: float = 0.1
    peak_hour: float = 21.0

    def __post_init__(self):
        if not 0.0 < self.target_load <= 2.0:
            raise ConfigError("traffic.target_load", "must lie in (0, 2]")
        if self.sigma_hours <= 0:
            raise ConfigError("traffic.sigma_hours", "must be positive")
        if not 0.0 <= self.floor <= 1.0:
            raise ConfigError("traffic.floor", "must lie in [0, 1]")


def diurnal_factor(lon: float, t: EpochTime, sigma_hours: float = 3.0, floor: float = 0.1,
                   peak_hour: float = 21.0) -> float:
    """Activity factor in (0, 1] peaking at ``peak_hour`` local solar time."""
    local = (t.utc_hour + lon / 15.0) % 24.0
    delta = abs(local - peak_hour) % 24.0
    delta = min(delta, 24.0 - delta)
    return floor + (1.0 - floor) * math.exp(-delta * delta / (2.0 * sigma_hours**2))


def reference_capacity(snapshot: Snapshot) -> float:
    """Sum of capacities of the UserBeams that serve at least one user."""
    used = set()
    for e in snapshot.edges:
        if e.kind == EdgeKind.ACCESS:
            used.add(e.dst if snapshot.node(e.dst).kind == NodeKind.USER_BEAM else e.src)
    return float(sum(snapshot.node(b).capacity for b in sorted(used)))


def scale_demands(flows: list[Flow], target_load: float, reference_capacity: float) -> list[Flow]:
    """Multiply all demands by one factor so they sum to target_load * reference_capacity."""
    if reference_capacity <= 0:
        raise DomainError("reference capacity must be positive")
    total = math.fsum(f.demand for f in flows)
    if total <= 0:
        raise DomainError("total raw demand is zero; cannot scale")
    factor = target_load * reference_capacity / total
    return [replace(f, demand=f.demand * factor) for f in flows]


def _components(snapshot: Snapshot) -> dict[str, int]:
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    idx = snapshot.index
    n = len(idx)
    if n == 0:
        return {}
    rows = [idx[e.src] for e in snapshot.edges]
    cols = [idx[e.dst] for e in snapshot.edges]
    mat = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, labels = connected_components(mat, directed=False)
    return {node.id: int(labels[i]) for i, node in enumerate(snapshot.nodes)}


def generate_flows(snapshot: Snapshot, profile: DemandProfile, t: EpochTime, seed: int,
                   scale: bool = True) -> list[Flow]:
    """One flow per user, ordered by user id.

    Raw demand is pop_weight * beta * diurnal factor. The destination is
    drawn uniformly from the gateways sharing the user's connected
    component; a user with no gateway in reach draws from all gateways and
    will simply go unserved.
    """
    gateways = snapshot.ids_of_kind(NodeKind.GATEWAY)
    if not gateways:
        raise ConfigError("gateways", "snapshot has no gateway")
    users = [n for n in snapshot.nodes if n.kind == NodeKind.USER]
    comp = _components(snapshot)
    by_comp: dict[int, list[str]] = {}
    for g in gateways:
        by_comp.setdefault(comp[g], []).append(g)
    rng = np.random.default_rng(seed)
    draws = rng.random(len(users))
    flows = []
    for user, u in zip(users, draws):
        candidates = by_comp.get(comp[user.id]) if snapshot.adjacency.get(user.id) else None
        candidates = candidates or gateways
        gw = candidates[min(int(u * len(candidates)), len(candidates) - 1)]
        lon = user.geodetic[1] if user.geodetic else 0.0
        raw = user.pop_weight * user.beta * diurnal_factor(
            lon, t, profile.sigma_hours, profile.floor, profile.peak_hour)
        flows.append(Flow(user=user.id, gateway=gw, demand=raw))
    if not scale:
        return flows
    if math.fsum(f.demand for f in flows) <= 0:
        log.warning("all raw demands are zero; flows left unscaled")
        return flows
    ref = reference_capacity(snapshot)
    if ref <= 0:
        log.warning("no user beam carries users; flows left unscaled")
        return flows
    return scale_demands(flows, profile.target_load, ref)
