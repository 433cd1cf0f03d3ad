"""Attack degradation and the iterative overload / reroute cascade."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from enum import Enum
from typing import Mapping

import numpy as np

from .errors import DomainError
from .routing import (
    LoadState,
    RouteOptions,
    RoutedFlow,
    RoutingGraph,
    add_flow_load,
    route_all,
    route_flow,
)
from .topology import NodeKind, Snapshot
from .traffic import Flow


class Termination(str, Enum):
    FIXED_POINT = "fixed_point"
    DISCONNECTED = "disconnected"
    MAX_ITER = "max_iter"


@dataclass(frozen=True)
class AttackScenario:
    targets: Mapping[str, float]
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError(f"alpha {self.alpha} outside [0, 1]")
        for node, q in self.targets.items():
            if not 0.0 <= q <= 1.0:
                raise DomainError(f"compromise level {q} of {node} outside [0, 1]")

    @classmethod
    def uniform(cls, nodes, alpha: float, q: float = 1.0) -> "AttackScenario":
        return cls({n: q for n in nodes}, alpha)

    def check_against(self, snapshot: Snapshot):
        for node in self.targets:
            if node not in snapshot.index:
                raise DomainError(f"attack target {node} not in snapshot")
            if snapshot.node(node).kind == NodeKind.USER:
                raise DomainError(f"user node {node} cannot be attacked")


@dataclass(frozen=True)
class CascadeConfig:
    max_iter: int = 50
    route: RouteOptions = RouteOptions()


@dataclass
class CascadeResult:
    initial_set: frozenset[str]
    per_iteration: list[frozenset[str]]
    final_set: frozenset[str]
    final_loads: LoadState
    unserved_demand: float
    iterations: int
    termination: Termination
    removed: frozenset[str] = frozenset()
    served_flows: int = 0
    routed: list[RoutedFlow] = field(default_factory=list, repr=False)

    def cumulative_sets(self) -> list[frozenset[str]]:
        """F_0, F_1, ... as cumulative failure sets."""
        out = [self.initial_set]
        acc = set(self.initial_set)
        for s in self.per_iteration:
            acc |= s
            out.append(frozenset(acc))
        return out


def degrade_capacities(capacities, attack: AttackScenario):
    """Effective capacities (1 - alpha*q) * C for targets; others unchanged.

    Accepts a mapping of node id -> capacity or returns a new dict.
    """
    out = dict(capacities)
    for node, q in attack.targets.items():
        if node in out:
            out[node] = max(0.0, 1.0 - attack.alpha * q) * out[node]
    return out


def overload_check(loads: Mapping[str, float], effective_caps: Mapping[str, float]) -> set[str]:
    """Nodes whose load strictly exceeds their effective capacity."""
    return {n for n, load in loads.items() if n in effective_caps and load > effective_caps[n]}


@dataclass
class Baseline:
    """Pre-attack routing of one flow set, shared read-only by many cascades."""

    graph: RoutingGraph
    routed: list[RoutedFlow]
    loads: LoadState
    opts: RouteOptions
    touching: dict[int, list[int]]  # node index -> positions in ``routed``
    removed: np.ndarray | None = None  # nodes already down before any attack
    max_iter: int = 50

    @staticmethod
    def _touching(routed):
        touching: dict[int, list[int]] = defaultdict(list)
        for k, rf in enumerate(routed):
            if rf.served:
                for i in rf.nodes:
                    touching[int(i)].append(k)
        return dict(touching)

    @classmethod
    def compute(cls, snapshot: Snapshot, flows: list[Flow],
                opts: RouteOptions = RouteOptions(), settle: bool = False,
                max_iter: int = 50) -> "Baseline":
        """Route ``flows`` on the intact snapshot.

        With ``settle`` the unattacked network is first run to its own fixed
        point: nodes already overloaded by the demand fail and their flows
        are rerouted, and that settled state becomes the operating point.
        """
        graph = RoutingGraph.of(snapshot)
        routed, loads = route_all(graph, flows, opts)
        base = cls(graph, routed, loads, opts, cls._touching(routed),
                   np.zeros(graph.n_nodes, dtype=bool), max_iter)
        if not settle:
            return base
        res = run_cascade(snapshot, None, AttackScenario({}, 0.0),
                          CascadeConfig(max_iter, opts), base, keep_routes=True)
        if not res.final_set:
            return base
        removed = np.zeros(graph.n_nodes, dtype=bool)
        removed[[graph.index[n] for n in res.removed | res.final_set]] = True
        return cls(graph, res.routed, res.final_loads, opts, cls._touching(res.routed),
                   removed, max_iter)

    @cached_property
    def quiescent(self) -> bool:
        """True when no surviving node is overloaded in the operating state."""
        g = self.graph
        alive = ~g.is_user if self.removed is None else ~g.is_user & ~self.removed
        return not bool((self.loads.node_load[alive] > g.node_capacity[alive]).any())

    @property
    def pre_failed(self) -> frozenset[str]:
        if self.removed is None:
            return frozenset()
        return frozenset(self.graph.ids[i] for i in np.flatnonzero(self.removed))

    @property
    def served(self) -> int:
        return sum(rf.served for rf in self.routed)


def _with_children(graph: RoutingGraph, nodes: set[int], alive: np.ndarray) -> set[int]:
    out = set(nodes)
    for i in nodes:
        out.update(int(c) for c in graph.children[i] if alive[c])
    return out


def run_cascade(snapshot: Snapshot, flows: list[Flow] | None, attack: AttackScenario,
                cfg: CascadeConfig = CascadeConfig(), baseline: Baseline | None = None,
                keep_routes: bool = False) -> CascadeResult:
    """Apply an attack and iterate removal, rerouting and overload checks to a fixed point.

    Targets enter the initial failure set F0. Targets with alpha*q = 1 are
    removed at once; the rest stay in service at degraded capacity and are
    removed only if they overload. Beams go down with their satellite.
    """
    attack.check_against(snapshot)
    if baseline is None:
        baseline = Baseline.compute(snapshot, flows or [], cfg.route)
    elif flows is not None and len(flows) != len(baseline.routed):
        raise DomainError("flows do not match the supplied baseline")
    g = baseline.graph
    opts = cfg.route
    eff = g.node_capacity.copy()
    edge_cap = g.edge_capacity.copy()
    hard: set[int] = set()
    f0 = set()
    for node, q in attack.targets.items():
        i = g.index[node]
        f0.add(i)
        factor = max(0.0, 1.0 - attack.alpha * q)
        eff[i] = factor * g.node_capacity[i]
        inc = g.incident(i)
        edge_cap[inc] = np.minimum(edge_cap[inc], eff[i])
        if attack.alpha * q >= 1.0 - 1e-12:
            hard.add(i)

    removable = ~g.is_user
    removed = (np.zeros(g.n_nodes, dtype=bool) if baseline.removed is None
               else baseline.removed.copy())
    failed = set(f0)
    loads = baseline.loads.copy()
    current: dict[int, RoutedFlow] = {}  # overrides of baseline routes

    def route_of(k):
        return current.get(k, baseline.routed[k])

    per_iteration: list[frozenset[str]] = []
    newly = _with_children(g, hard, ~removed)
    pending = newly - failed
    iterations = 0
    termination = Termination.FIXED_POINT
    n_flows = len(baseline.routed)
    while True:
        iterations += 1
        # Step 2: drop failed nodes and their edges
        idx = np.fromiter(newly, dtype=np.int64, count=len(newly))
        removed[idx] = True
        # Step 3: reroute flows crossing a removed node
        affected = set()
        for i in newly:
            for k in baseline.touching.get(i, ()):
                if k not in current:
                    affected.add(k)
        for k, rf in current.items():
            if rf.served and removed[rf.nodes].any():
                affected.add(k)
        if affected:
            for k in affected:
                add_flow_load(loads, route_of(k), -1.0)
            # baseline.routed is already in routing order
            for k in sorted(affected):
                rf = route_flow(g, baseline.routed[k].flow, loads, opts, edge_cap, removed)
                add_flow_load(loads, rf)
                current[k] = rf
        # Step 4: overload decision against effective capacity
        over = set(np.flatnonzero((loads.node_load > eff) & removable & ~removed).tolist())
        over = _with_children(g, over, ~removed)
        new_failed = (over | pending) - failed
        pending = set()
        failed |= new_failed
        per_iteration.append(frozenset(g.ids[i] for i in new_failed))
        served = baseline.served + sum(
            int(rf.served) - int(baseline.routed[k].served) for k, rf in current.items())
        if n_flows and served == 0:
            termination = Termination.DISCONNECTED
            break
        if not over:
            termination = Termination.FIXED_POINT
            break
        if iterations >= cfg.max_iter:
            termination = Termination.MAX_ITER
            break
        newly = over

    unserved = math.fsum(route_of(k).flow.demand for k in range(n_flows)
                         if not route_of(k).served)
    served = sum(1 for k in range(n_flows) if route_of(k).served)
    return CascadeResult(
        initial_set=frozenset(g.ids[i] for i in f0),
        per_iteration=per_iteration,
        final_set=frozenset(g.ids[i] for i in failed),
        final_loads=loads,
        unserved_demand=unserved,
        iterations=iterations,
        termination=termination,
        removed=frozenset(g.ids[i] for i in np.flatnonzero(removed)),
        served_flows=served,
        routed=[route_of(k) for k in range(n_flows)] if keep_routes else [],
    )


def effective_capacity_map(snapshot: Snapshot, attack: AttackScenario) -> dict[str, float]:
    caps = {n.id: (math.inf if n.kind == NodeKind.USER else n.capacity) for n in snapshot.nodes}
    return degrade_capacities(caps, attack)


def risk_node_count(snapshot: Snapshot) -> int:
    return sum(1 for n in snapshot.nodes if n.kind != NodeKind.USER)


def single_node_trial(snapshot: Snapshot, v: str, baseline: Baseline,
                      cfg: CascadeConfig = CascadeConfig()) -> frozenset[str]:
    """F_final after hard removal of ``v`` alone, starting from ``baseline``."""
    if snapshot.node(v).kind == NodeKind.USER:
        raise DomainError(f"{v} is a user node; users are not risk-eligible")
    g = baseline.graph
    alive = np.ones(g.n_nodes, dtype=bool) if baseline.removed is None else ~baseline.removed
    group = _with_children(g, {g.index[v]}, alive)
    if baseline.quiescent and not any(j in baseline.touching for j in group):
        # nothing to reroute and nothing overloaded: only v and its beams fail
        return frozenset(g.ids[j] for j in group)
    return run_cascade(snapshot, None, AttackScenario({v: 1.0}, 1.0), cfg, baseline).final_set


def single_seed_cfr_trial(snapshot: Snapshot, flows: list[Flow] | None, v: str,
                          cfg: CascadeConfig = CascadeConfig(),
                          baseline: Baseline | None = None) -> float:
    """Failed fraction of risk-eligible nodes after hard removal of ``v`` alone."""
    if snapshot.node(v).kind == NodeKind.USER:
        raise DomainError(f"{v} is a user node; users are not risk-eligible")
    if baseline is None:
        baseline = Baseline.compute(snapshot, flows or [], cfg.route)
    return len(single_node_trial(snapshot, v, baseline, cfg)) / risk_node_count(snapshot)
