"""Experiment orchestration: snapshots over time, HBC trials, attack sweeps, CSV output."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .cascade import AttackScenario, Baseline, run_cascade, single_node_trial
from .config import SimConfig
from .constellation import (
    constellation_positions,
    generate_walker,
    parse_tle,
    satellite_ids,
)
from .errors import ConfigError, InputDataError
from .orbital import EpochTime
from .risk import (
    HBC_KINDS,
    Centralities,
    NodeRisk,
    RiskReport,
    TimeseriesPoint,
    build_failure_hypergraph,
    build_report,
    centralities,
    cir,
    giant_component_ratio,
    systemic_risk,
)
from .routing import route_all
from .topology import (
    RISK_KINDS,
    Snapshot,
    build_snapshot,
    gateway_nodes,
    load_sites,
    spawn_users,
)
from .traffic import generate_flows

log = logging.getLogger(__name__)

NODE_METRICS_HEADER = ["time_utc", "node_id", "kind", "lat", "lon", "degree", "betweenness",
                       "pagerank", "cfr", "hbc", "trial_count", "black_swan"]
TOP_NODES_HEADER = ["time_utc", "rank", "node_id", "kind", "lat", "lon", "hbc", "cfr", "degree"]
TIMESERIES_HEADER = ["time_utc", "gcr", "systemic_risk", "mean_hbc_satellite", "mean_hbc_gateway",
                     "mean_hbc_feederbeam", "mean_hbc_userbeam"]
SWEEP_HEADER = ["time_utc", "metric", "alpha", "fraction", "seed", "n_targets", "cir_leverage",
                "cir_fraction", "unserved_demand", "iterations", "termination"]
SNAPSHOT_HEADER = ["src", "dst", "kind", "capacity_mbps", "delay_ms", "length_km"]


# ---------------------------------------------------------------------------
# Scenario construction


@dataclass
class Scenario:
    cfg: SimConfig
    elements: list
    sat_ids: list[str]
    users: list
    gateways: list

    @classmethod
    def from_config(cls, cfg: SimConfig) -> "Scenario":
        if cfg["constellation.source"] == "walker":
            elements = generate_walker(cfg.walker(), cfg.start)
            sat_ids = satellite_ids(len(elements))
        else:
            path = Path(cfg["constellation.tle_path"])
            try:
                text = path.read_text(encoding="utf-8")
            except OSError as exc:
                raise InputDataError(f"cannot read TLE file {path}: {exc}") from None
            records = parse_tle(text, strict=cfg["constellation.strict_tle"])
            if not records:
                raise InputDataError(f"no usable TLE records in {path}")
            elements = [r.parsed for r in records]
            sat_ids = [f"S{r.catalog_number:05d}" for r in records]
            if len(set(sat_ids)) != len(sat_ids):
                raise InputDataError(f"duplicate catalog numbers in {path}")
        sites = load_sites(cfg["ground.sites_path"] or None)
        users = spawn_users(sites, cfg["ground.users"], cfg["ground.user_radius_km"],
                            cfg["ground.placement_seed"])
        return cls(cfg, elements, sat_ids, users, gateway_nodes(sites))

    def snapshot(self, t: EpochTime) -> Snapshot:
        mode = self.cfg["constellation.propagation"]
        if self.cfg["constellation.source"] == "tle" and mode == "two_body":
            mode = "j2"  # TLE elements are generally eccentric
        pos = constellation_positions(self.elements, t, mode)
        return build_snapshot(t, self.sat_ids, pos, self.users, self.gateways,
                              self.cfg.topology(), self.cfg.capacity())


def step_times(cfg: SimConfig) -> list[EpochTime]:
    start = cfg.start
    return [start.plus_seconds(60.0 * m) for m in cfg.time_grid_minutes()]


def worker_count() -> int:
    raw = os.environ.get("HYDRA_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError("HYDRA_THREADS", f"not an integer: {raw!r}") from None
    if n < 0:
        raise ConfigError("HYDRA_THREADS", "must be >= 0")
    return n or (os.cpu_count() or 1)


def _pmap(fn: Callable, items: Sequence, workers: int | None = None) -> list:
    """Ordered map, fanned out to processes when more than one worker is allowed."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Per-step analysis


def baseline_for(snapshot: Snapshot, cfg: SimConfig, t: EpochTime, seed: int) -> Baseline:
    flows = generate_flows(snapshot, cfg.demand(), t, seed)
    return Baseline.compute(snapshot, flows, cfg.route(), settle=cfg["cascade.settle_baseline"],
                            max_iter=cfg["cascade.max_iter"])


def hbc_trials(snapshot: Snapshot, cfg: SimConfig, t: EpochTime,
               seeds: Iterable[int]) -> list[tuple[frozenset, frozenset]]:
    """Single-node removal trials for every risk-eligible node under each traffic seed."""
    runs = []
    ccfg = cfg.cascade()
    nodes = snapshot.risk_node_ids()
    for seed in seeds:
        base = baseline_for(snapshot, cfg, t, seed)
        for v in nodes:
            runs.append((frozenset((v,)), single_node_trial(snapshot, v, base, ccfg)))
    return runs


def projected_systemic_risk(snapshot: Snapshot, cfg: SimConfig, t: EpochTime,
                            seeds: Iterable[int]) -> float:
    """Mean overloaded-link fraction of the unsettled routing over traffic seeds."""
    vals = []
    for seed in seeds:
        flows = generate_flows(snapshot, cfg.demand(), t, seed)
        _, loads = route_all(snapshot, flows, cfg.route())
        vals.append(systemic_risk(snapshot, loads.edge_load))
    return math.fsum(vals) / len(vals) if vals else 0.0


def snapshot_centralities(snapshot: Snapshot, cfg: SimConfig) -> Centralities:
    return centralities(snapshot, approx_above=cfg["risk.betweenness_approx_above"],
                        sample=cfg["risk.betweenness_samples"])


def analyse_step(snapshot: Snapshot, cfg: SimConfig, t: EpochTime,
                 with_hbc: bool = True) -> tuple[TimeseriesPoint, RiskReport | None]:
    seeds = cfg["risk.trial_seeds"]
    gcr = giant_component_ratio(snapshot) if snapshot.risk_node_ids() else 1.0
    sr = projected_systemic_risk(snapshot, cfg, t, seeds)
    report = None
    means = {k: None for k in HBC_KINDS}
    if with_hbc and snapshot.risk_node_ids():
        h = build_failure_hypergraph(hbc_trials(snapshot, cfg, t, seeds),
                                     snapshot.risk_node_ids())
        report = build_report(snapshot, h, snapshot_centralities(snapshot, cfg),
                              cfg["risk.delta_pct"], cfg["risk.tau_pct"], t.isoformat())
        means = report.mean_hbc_by_kind()
    return TimeseriesPoint(t.isoformat(), gcr, sr, means), report


def _timeseries_step(args):
    cfg, scenario, t = args
    snap = scenario.snapshot(t)
    return analyse_step(snap, cfg, t, cfg["timeseries.hbc"])


def run_timeseries(cfg: SimConfig, out_dir: str | Path | None = None,
                   scenario: Scenario | None = None
                   ) -> tuple[list[TimeseriesPoint], list[RiskReport]]:
    """Analyse every step of the time grid; optionally write the CSV outputs."""
    scenario = scenario or Scenario.from_config(cfg)
    results = _pmap(_timeseries_step, [(cfg, scenario, t) for t in step_times(cfg)])
    points = [p for p, _ in results]
    reports = [r for _, r in results if r is not None]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_timeseries(points, out / "timeseries.csv")
        if reports:
            write_node_metrics(reports, out / "node_metrics.csv")
            write_top_nodes(reports, out / "top_nodes.csv", cfg["risk.top_n"])
    return points, reports


def run_metrics(cfg: SimConfig, t: EpochTime, out_dir: str | Path | None = None,
                scenario: Scenario | None = None) -> RiskReport:
    scenario = scenario or Scenario.from_config(cfg)
    snap = scenario.snapshot(t)
    _, report = analyse_step(snap, cfg, t, True)
    if report is None:
        report = RiskReport(t.isoformat(), [])
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_node_metrics([report], out / "node_metrics.csv")
        write_top_nodes([report], out / "top_nodes.csv", cfg["risk.top_n"])
    return report


# ---------------------------------------------------------------------------
# Attack sweep


def metric_value(row: NodeRisk, metric: str):
    return {"hbc": row.hbc, "degree": row.degree, "betweenness": row.betweenness,
            "pagerank": row.pagerank}[metric]


def rank_targets(report: RiskReport | Sequence[NodeRisk], metric: str, k: int) -> list[str]:
    """Top-k node ids by metric, ties by ascending id; undefined values are skipped."""
    rows = report.rows if isinstance(report, RiskReport) else list(report)
    if k <= 0:
        return []
    scored = [(metric_value(r, metric), r.node_id) for r in rows]
    scored = [(v, n) for v, n in scored if v is not None and not (isinstance(v, float) and math.isnan(v))]
    scored.sort(key=lambda vn: (-vn[0], vn[1]))
    if k > len(scored):
        log.warning("requested %d targets by %s but only %d are ranked", k, metric, len(scored))
    return [n for _, n in scored[:k]]


def random_targets(nodes: Sequence[str], k: int, seed_key: Sequence[int]) -> list[str]:
    rng = np.random.default_rng(list(seed_key))
    k = min(k, len(nodes))
    picks = rng.choice(len(nodes), size=k, replace=False)
    return [nodes[i] for i in sorted(int(p) for p in picks)]


@dataclass
class SweepRow:
    time: str
    metric: str
    alpha: float
    fraction: float
    seed: int
    n_targets: int
    cir_leverage: float
    cir_fraction: float
    unserved_demand: float
    iterations: int
    termination: str


@dataclass
class SweepReport:
    rows: list[SweepRow]


def ranking_report(snapshot: Snapshot, cfg: SimConfig, t: EpochTime) -> RiskReport:
    """Ranking inputs from the trial phase, whose seeds are disjoint from evaluation seeds."""
    need_hbc = "hbc" in cfg["metrics_under_test"]
    runs = hbc_trials(snapshot, cfg, t, cfg["risk.trial_seeds"]) if need_hbc else []
    h = build_failure_hypergraph(runs, snapshot.risk_node_ids())
    return build_report(snapshot, h, snapshot_centralities(snapshot, cfg),
                        cfg["risk.delta_pct"], cfg["risk.tau_pct"], t.isoformat())


def sweep_step(snapshot: Snapshot, cfg: SimConfig, t: EpochTime, step_index: int = 0,
               report: RiskReport | None = None) -> list[SweepRow]:
    report = report or ranking_report(snapshot, cfg, t)
    risk_ids = snapshot.risk_node_ids()
    n_risk = len(risk_ids)
    n_total = len(snapshot.nodes)
    ccfg = cfg.cascade()
    rows = []
    if n_risk == 0:
        return rows
    metrics = cfg["metrics_under_test"]
    fractions = cfg["attack_fractions"]
    k_max = max(1, math.ceil(max(fractions) * n_risk - 1e-9))
    ranked = {m: rank_targets(report, m, k_max) for m in metrics if m != "random"}
    for seed in cfg["seeds"]:
        base = baseline_for(snapshot, cfg, t, seed)
        for metric in metrics:
            for fi, fraction in enumerate(fractions):
                k = max(1, math.ceil(fraction * n_risk - 1e-9))
                if metric == "random":
                    targets = random_targets(risk_ids, k, (seed, step_index, fi))
                else:
                    targets = ranked[metric][:k]
                if not targets:
                    continue
                for alpha in cfg["alpha_grid"]:
                    res = run_cascade(snapshot, None, AttackScenario.uniform(targets, alpha),
                                      ccfg, base)
                    lev, frac = cir(res, len(targets), n_total)
                    rows.append(SweepRow(t.isoformat(), metric, alpha, fraction, seed,
                                         len(targets), lev, frac, res.unserved_demand,
                                         res.iterations, res.termination.value))
    rows.sort(key=lambda r: (r.time, metrics.index(r.metric), r.alpha, r.fraction, r.seed))
    return rows


def _sweep_step(args):
    cfg, scenario, t, i = args
    return sweep_step(scenario.snapshot(t), cfg, t, i)


def run_attack_sweep(cfg: SimConfig, out_dir: str | Path | None = None,
                     scenario: Scenario | None = None,
                     times: Sequence[EpochTime] | None = None) -> SweepReport:
    scenario = scenario or Scenario.from_config(cfg)
    times = list(times) if times is not None else step_times(cfg)
    chunks = _pmap(_sweep_step, [(cfg, scenario, t, i) for i, t in enumerate(times)])
    report = SweepReport([r for chunk in chunks for r in chunk])
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_sweep(report, out / "sweep.csv")
    return report


# ---------------------------------------------------------------------------
# CSV output


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.9g}"
    return str(value)


def _write(path: Path, header: list[str], rows: Iterable[Iterable]):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    try:
        Path(path).write_text(buf.getvalue(), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def export_csv(report, path: str | Path):
    """Write a report to CSV, choosing the layout from its type."""
    if isinstance(report, RiskReport):
        write_node_metrics([report], path)
    elif isinstance(report, SweepReport):
        write_sweep(report, path)
    elif isinstance(report, Snapshot):
        write_snapshot(report, path)
    elif isinstance(report, list) and all(isinstance(p, TimeseriesPoint) for p in report):
        write_timeseries(report, path)
    elif isinstance(report, list) and all(isinstance(r, RiskReport) for r in report):
        write_node_metrics(report, path)
    else:
        raise TypeError(f"cannot export {type(report).__name__}")


def write_node_metrics(reports: Sequence[RiskReport], path):
    rows = []
    for rep in sorted(reports, key=lambda r: r.time):
        for r in sorted(rep.rows, key=lambda r: r.node_id):
            rows.append([rep.time, r.node_id, r.kind.value, r.lat, r.lon, r.degree, r.betweenness,
                         r.pagerank, r.cfr, r.hbc, r.trial_count, r.black_swan])
    _write(Path(path), NODE_METRICS_HEADER, rows)


def write_top_nodes(reports: Sequence[RiskReport], path, top_n: int = 150):
    rows = []
    for rep in sorted(reports, key=lambda r: r.time):
        n_ranked = sum(1 for r in rep.rows if r.hbc is not None)
        ranked = rank_targets(rep, "hbc", min(top_n, n_ranked))
        by_id = rep.by_id()
        for rank, nid in enumerate(ranked, 1):
            r = by_id[nid]
            rows.append([rep.time, rank, nid, r.kind.value, r.lat, r.lon, r.hbc, r.cfr, r.degree])
    _write(Path(path), TOP_NODES_HEADER, rows)


def write_timeseries(points: Sequence[TimeseriesPoint], path):
    rows = []
    for p in sorted(points, key=lambda p: p.time):
        m = p.mean_hbc_by_kind
        rows.append([p.time, p.gcr, p.systemic_risk] + [m.get(k) for k in HBC_KINDS])
    _write(Path(path), TIMESERIES_HEADER, rows)


def write_sweep(report: SweepReport, path):
    _write(Path(path), SWEEP_HEADER, (
        [r.time, r.metric, r.alpha, r.fraction, r.seed, r.n_targets, r.cir_leverage,
         r.cir_fraction, r.unserved_demand, r.iterations, r.termination] for r in report.rows))


def write_snapshot(snapshot: Snapshot, path):
    _write(Path(path), SNAPSHOT_HEADER, (
        [e.src, e.dst, e.kind.value, e.capacity, e.delay, e.length] for e in snapshot.edges))


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def risk_eligible(snapshot: Snapshot) -> list[str]:
    return [n.id for n in snapshot.nodes if n.kind in RISK_KINDS]
