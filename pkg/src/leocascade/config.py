"""Flat ``key = value`` configuration with dotted keys and ``#`` comments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping

from .cascade import CascadeConfig
from .constellation import WalkerParams
from .errors import ConfigError
from .orbital import EpochTime
from .routing import RouteOptions
from .topology import CapacityConfig, TopologyConfig
from .traffic import DemandProfile

METRICS = ("hbc", "degree", "betweenness", "pagerank", "random")


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_int_list(raw: str) -> tuple[int, ...]:
    """Comma list of ints; ``a-b`` expands to an inclusive range."""
    out: list[int] = []
    for part in (p.strip() for p in raw.split(",")):
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1) if part[0] != "-" else part[1:].split("-", 1)
            lo_i, hi_i = int(lo), int(hi)
            if hi_i < lo_i:
                raise ValueError(f"empty range {part!r}")
            out.extend(range(lo_i, hi_i + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _parse_float_list(raw: str) -> tuple[float, ...]:
    """Comma list of floats; ``start:stop:step`` expands inclusively."""
    out: list[float] = []
    for part in (p.strip() for p in raw.split(",")):
        if not part:
            continue
        if ":" in part:
            start, stop, step = (float(x) for x in part.split(":"))
            if step <= 0:
                raise ValueError("range step must be positive")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            out.extend(round(start + i * step, 12) for i in range(max(count, 0)))
        else:
            out.append(float(part))
    return tuple(out)


def _parse_str_list(raw: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in raw.split(",") if p.strip())


def _fmt_float(x: float) -> str:
    return repr(float(x))


FORMATTERS: dict[str, Callable[[Any], str]] = {
    "int": str,
    "float": _fmt_float,
    "bool": lambda b: "true" if b else "false",
    "str": str,
    "ints": lambda xs: ",".join(str(x) for x in xs),
    "floats": lambda xs: ",".join(_fmt_float(x) for x in xs),
    "strs": lambda xs: ",".join(xs),
}

PARSERS: dict[str, Callable[[str], Any]] = {
    "int": lambda s: int(s.strip()),
    "float": lambda s: float(s.strip()),
    "bool": _parse_bool,
    "str": lambda s: s.strip(),
    "ints": _parse_int_list,
    "floats": _parse_float_list,
    "strs": _parse_str_list,
}


@dataclass(frozen=True)
class Key:
    kind: str
    default: Any
    check: Callable[[Any], str | None] | None = None
    doc: str = ""


def _between(lo, hi, lo_open=False, hi_open=False):
    def check(v):
        vals = v if isinstance(v, tuple) else (v,)
        for x in vals:
            if not math.isfinite(x):
                return f"{x} is not finite"
            if x < lo or x > hi or (lo_open and x == lo) or (hi_open and x == hi):
                lb = "(" if lo_open else "["
                rb = ")" if hi_open else "]"
                return f"value {x} outside {lb}{lo}, {hi}{rb}"
        return None
    return check


def _positive(v):
    vals = v if isinstance(v, tuple) else (v,)
    for x in vals:
        if not (x > 0 and math.isfinite(x)):
            return f"value {x} must be positive and finite"
    return None


def _non_negative(v):
    return None if v >= 0 else f"value {v} must be non-negative"


def _choice(*options):
    def check(v):
        return None if v in options else f"{v!r} not one of {', '.join(options)}"
    return check


def _nonempty(v):
    return None if len(v) else "list must not be empty"


def _ascending_fractions(v):
    if not v:
        return "list must not be empty"
    if any(b <= a for a, b in zip(v, v[1:])):
        return "fractions must be strictly ascending"
    return _between(0.0, 0.02, lo_open=True)(v)


def _metrics(v):
    if not v:
        return "list must not be empty"
    bad = [m for m in v if m not in METRICS]
    if bad:
        return f"unknown metric(s) {', '.join(bad)}; expected a subset of {', '.join(METRICS)}"
    if len(set(v)) != len(v):
        return "duplicate metric"
    return None


def _unique_seeds(v):
    if not v:
        return "list must not be empty"
    return None if len(set(v)) == len(v) else "duplicate seed"


def _iso_time(v):
    try:
        EpochTime.from_iso(v)
    except (ValueError, TypeError) as exc:
        return f"bad ISO-8601 time: {exc}"
    return None


SCHEMA: dict[str, Key] = {
    "start_time": Key("str", "2024-03-01T00:00:00Z", _iso_time),
    "horizon_minutes": Key("float", 90.0, _non_negative),
    "step_minutes": Key("float", 22.0, _positive),
    "seeds": Key("ints", tuple(range(1, 21)), _unique_seeds),
    "alpha_grid": Key("floats", (0.6, 0.7, 0.8, 0.9, 1.0), _between(0.0, 1.0)),
    "attack_fractions": Key("floats", tuple(round(0.0002 * i, 12) for i in range(1, 101)),
                            _ascending_fractions),
    "metrics_under_test": Key("strs", METRICS, _metrics),
    "constellation.source": Key("str", "walker", _choice("walker", "tle")),
    "constellation.tle_path": Key("str", ""),
    "constellation.strict_tle": Key("bool", True),
    "constellation.propagation": Key("str", "two_body", _choice("two_body", "j2")),
    "constellation.walker.inclination": Key("float", 53.0, _between(0.0, 180.0)),
    "constellation.walker.total": Key("int", 1584, _positive),
    "constellation.walker.planes": Key("int", 72, _positive),
    "constellation.walker.phasing": Key("int", 39, _non_negative),
    "constellation.walker.altitude_km": Key("float", 550.0, _between(100.0, 40000.0)),
    "ground.sites_path": Key("str", ""),
    "ground.users": Key("int", 800, _non_negative),
    "ground.user_radius_km": Key("float", 50.0, _non_negative),
    "ground.placement_seed": Key("int", 0, _non_negative),
    "topology.isl_max_km": Key("float", 5000.0, _positive),
    "topology.isl_k_max": Key("int", 4, _non_negative),
    "topology.min_elevation_deg": Key("float", 25.0, _between(0.0, 90.0)),
    "topology.ground_max_km": Key("float", 3000.0, _positive),
    "topology.grazing_margin_km": Key("float", 80.0, _non_negative),
    "topology.beams_per_sat": Key("int", 12, _positive),
    "topology.user_top_k": Key("int", 3, _positive),
    "topology.gateway_top_k": Key("int", 3, _positive),
    "topology.expand": Key("bool", True),
    "topology.expand_hops": Key("int", 2, _non_negative),
    "topology.merge_feeder_beams": Key("bool", False),
    "capacity.isl_mbps": Key("float", 40_000.0, _positive),
    "capacity.feeder_mbps": Key("float", 2_000.0, _positive),
    "capacity.access_mbps": Key("float", 2_000.0, _positive),
    "capacity.user_beam_mbps": Key("float", 2_000.0, _positive),
    "capacity.feeder_beam_mbps": Key("float", 2_000.0, _positive),
    "capacity.gateway_mbps": Key("float", 50_000.0, _positive),
    "capacity.sat_hardware_mbps": Key("float", 200_000.0, _positive),
    "traffic.target_load": Key("float", 0.7, _between(0.0, 2.0, lo_open=True)),
    "traffic.sigma_hours": Key("float", 3.0, _positive),
    "traffic.floor": Key("float", 0.1, _between(0.0, 1.0)),
    "traffic.peak_hour": Key("float", 21.0, _between(0.0, 24.0, hi_open=True)),
    "routing.delta": Key("float", 1e-4, _non_negative),
    "routing.eps": Key("float", 1e-9, _non_negative),
    "routing.rehome": Key("bool", True),
    "cascade.max_iter": Key("int", 50, _positive),
    "cascade.settle_baseline": Key("bool", True),
    "risk.trial_seeds": Key("ints", (101, 102, 103, 104, 105), _unique_seeds),
    "risk.delta_pct": Key("float", 20.0, _between(0.0, 100.0)),
    "risk.tau_pct": Key("float", 90.0, _between(0.0, 100.0)),
    "risk.top_n": Key("int", 150, _non_negative),
    "risk.betweenness_approx_above": Key("int", 20_000, _positive),
    "risk.betweenness_samples": Key("int", 2_000, _positive),
    "timeseries.hbc": Key("bool", True),
}


def _validate(values: Mapping[str, Any]):
    for key, spec in SCHEMA.items():
        if spec.check is not None:
            problem = spec.check(values[key])
            if problem:
                raise ConfigError(key, problem)
    try:
        WalkerParams(values["constellation.walker.inclination"],
                     values["constellation.walker.total"],
                     values["constellation.walker.planes"],
                     values["constellation.walker.phasing"],
                     values["constellation.walker.altitude_km"]).validate()
    except ConfigError:
        if values["constellation.source"] == "walker":
            raise
    if values["constellation.source"] == "tle" and not values["constellation.tle_path"]:
        raise ConfigError("constellation.tle_path", "required when constellation.source = tle")
    overlap = set(values["seeds"]) & set(values["risk.trial_seeds"])
    if overlap:
        raise ConfigError("risk.trial_seeds",
                          f"must be disjoint from seeds (shared: {sorted(overlap)})")


@dataclass(frozen=True)
class SimConfig:
    values: Mapping[str, Any] = field(default_factory=lambda: {k: s.default for k, s in SCHEMA.items()})

    def __post_init__(self):
        missing = set(SCHEMA) - set(self.values)
        if missing:
            merged = {k: s.default for k, s in SCHEMA.items()}
            merged.update(self.values)
            object.__setattr__(self, "values", merged)
        unknown = set(self.values) - set(SCHEMA)
        if unknown:
            key = sorted(unknown)[0]
            raise ConfigError(key, "unknown configuration key")
        _validate(self.values)

    def __getitem__(self, key: str):
        return self.values[key]

    def replace(self, **updates) -> "SimConfig":
        """Copy with dotted keys given as ``a__b`` or via a dict under ``values``."""
        merged = dict(self.values)
        for k, v in updates.items():
            merged[k.replace("__", ".")] = v
        return SimConfig(merged)

    def with_values(self, updates: Mapping[str, Any]) -> "SimConfig":
        merged = dict(self.values)
        merged.update(updates)
        return SimConfig(merged)

    # typed views for the modules

    @property
    def start(self) -> EpochTime:
        return EpochTime.from_iso(self["start_time"])

    def walker(self) -> WalkerParams:
        return WalkerParams(self["constellation.walker.inclination"],
                            self["constellation.walker.total"],
                            self["constellation.walker.planes"],
                            self["constellation.walker.phasing"],
                            self["constellation.walker.altitude_km"])

    def topology(self) -> TopologyConfig:
        return TopologyConfig(
            isl_max_km=self["topology.isl_max_km"], isl_k_max=self["topology.isl_k_max"],
            min_elevation_deg=self["topology.min_elevation_deg"],
            ground_max_km=self["topology.ground_max_km"],
            grazing_margin_km=self["topology.grazing_margin_km"],
            beams_per_sat=self["topology.beams_per_sat"], user_top_k=self["topology.user_top_k"],
            gateway_top_k=self["topology.gateway_top_k"], expand=self["topology.expand"],
            expand_hops=self["topology.expand_hops"],
            merge_feeder_beams=self["topology.merge_feeder_beams"])

    def capacity(self) -> CapacityConfig:
        return CapacityConfig(
            isl=self["capacity.isl_mbps"], feeder=self["capacity.feeder_mbps"],
            access=self["capacity.access_mbps"], user_beam=self["capacity.user_beam_mbps"],
            feeder_beam=self["capacity.feeder_beam_mbps"], gateway=self["capacity.gateway_mbps"],
            sat_hardware=self["capacity.sat_hardware_mbps"])

    def demand(self) -> DemandProfile:
        return DemandProfile(self["traffic.target_load"], self["traffic.sigma_hours"],
                             self["traffic.floor"], self["traffic.peak_hour"])

    def route(self) -> RouteOptions:
        return RouteOptions(self["routing.delta"], self["routing.eps"], self["routing.rehome"])

    def cascade(self) -> CascadeConfig:
        return CascadeConfig(self["cascade.max_iter"], self.route())

    def time_grid_minutes(self) -> list[float]:
        return time_grid(self["horizon_minutes"], self["step_minutes"])


def time_grid(horizon: float, step: float) -> list[float]:
    """0, step, 2*step, ... with the last sample snapped to the horizon end."""
    if step <= 0:
        raise ConfigError("step_minutes", "must be positive")
    out = []
    k = 0
    while k * step < horizon - 1e-9:
        out.append(k * step)
        k += 1
    out.append(float(horizon))
    return out


def parse_pairs(text: str) -> dict[str, str]:
    """Raw ``key -> value text`` pairs; later duplicates are an error."""
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {raw.strip()!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}", "empty key")
        if key in pairs:
            raise ConfigError(key, f"duplicate key on line {lineno}")
        pairs[key] = value
    return pairs


def loads_config(text: str) -> SimConfig:
    values = {k: s.default for k, s in SCHEMA.items()}
    for key, raw in parse_pairs(text).items():
        spec = SCHEMA.get(key)
        if spec is None:
            raise ConfigError(key, "unknown configuration key")
        try:
            values[key] = PARSERS[spec.kind](raw)
        except ValueError as exc:
            raise ConfigError(key, f"cannot parse {raw!r} as {spec.kind}: {exc}") from None
    return SimConfig(values)


def load_config(path: str | Path | None) -> SimConfig:
    if path is None:
        return SimConfig()
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError("--config", f"file not found: {p}") from None
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {p}: {exc}") from None
    return loads_config(text)


def dump_config(cfg: SimConfig) -> str:
    """Canonical text: every key, sorted, one per line."""
    lines = [f"{k} = {FORMATTERS[SCHEMA[k].kind](cfg[k])}" for k in sorted(SCHEMA)]
    return "\n".join(lines) + "\n"
