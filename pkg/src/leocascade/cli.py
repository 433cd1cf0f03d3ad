"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 input-data error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import PARSERS, SimConfig, dump_config, load_config
from .constellation import parse_tle, render_tle, generate_walker
from .errors import ConfigError, DomainError, InputDataError, LeoCascadeError
from .harness import (
    Scenario,
    run_attack_sweep,
    run_metrics,
    run_timeseries,
    write_snapshot,
)
from .orbital import EpochTime

log = logging.getLogger("leocascade")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="key = value configuration file")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--time", help="ISO-8601 UTC instant (default: start_time)")
    p.add_argument("--seeds", help="evaluation seeds, e.g. 1-20 or 1,2,5")
    p.add_argument("--strict-tle", action="store_true", help="reject any malformed TLE record")
    p.add_argument("--max-iter", type=int, help="cascade iteration cap")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leocascade",
                                     description="Cascading-failure risk analysis for LEO networks")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("snapshot", "write the edge list of one topology snapshot"),
        ("metrics", "node risk metrics for one instant"),
        ("timeseries", "risk timeseries over the configured horizon"),
        ("sweep", "targeted-attack sweep"),
        ("walker-gen", "emit Walker Delta elements as TLE text"),
        ("show-config", "print the fully resolved configuration"),
    ]:
        _common(sub.add_parser(name, help=text))
    v = sub.add_parser("validate-tle", help="parse a TLE file and report the result")
    v.add_argument("path", type=Path)
    v.add_argument("--strict-tle", action="store_true")
    v.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_config(args) -> SimConfig:
    cfg = load_config(args.config)
    updates = {}
    if getattr(args, "seeds", None):
        try:
            updates["seeds"] = PARSERS["ints"](args.seeds)
        except ValueError as exc:
            raise ConfigError("--seeds", str(exc)) from None
    if getattr(args, "max_iter", None) is not None:
        updates["cascade.max_iter"] = args.max_iter
    if getattr(args, "strict_tle", False):
        updates["constellation.strict_tle"] = True
    if getattr(args, "time", None):
        try:
            EpochTime.from_iso(args.time)
        except (ValueError, TypeError) as exc:
            raise ConfigError("--time", str(exc)) from None
    return cfg.with_values(updates) if updates else cfg


def _instant(args, cfg: SimConfig) -> EpochTime:
    return EpochTime.from_iso(args.time) if args.time else cfg.start


def _cmd_snapshot(args, cfg):
    snap = Scenario.from_config(cfg).snapshot(_instant(args, cfg))
    args.out.mkdir(parents=True, exist_ok=True)
    write_snapshot(snap, args.out / "snapshot.csv")
    print(f"{len(snap.nodes)} nodes, {len(snap.edges)} edges -> {args.out / 'snapshot.csv'}")


def _cmd_metrics(args, cfg):
    report = run_metrics(cfg, _instant(args, cfg), args.out)
    print(f"{len(report.rows)} risk-eligible nodes -> {args.out / 'node_metrics.csv'}")


def _cmd_timeseries(args, cfg):
    points, _ = run_timeseries(cfg, args.out)
    print(f"{len(points)} steps -> {args.out / 'timeseries.csv'}")


def _cmd_sweep(args, cfg):
    times = [_instant(args, cfg)] if args.time else None
    report = run_attack_sweep(cfg, args.out, times=times)
    print(f"{len(report.rows)} rows -> {args.out / 'sweep.csv'}")


def _cmd_walker_gen(args, cfg):
    elements = generate_walker(cfg.walker(), cfg.start)
    text = "".join(render_tle(el, k + 1, f"WALKER-{k:04d}") for k, el in enumerate(elements))
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "walker.tle"
    path.write_text(text, encoding="utf-8")
    print(f"{len(elements)} element sets -> {path}")


def _cmd_show_config(args, cfg):
    sys.stdout.write(dump_config(cfg))


def _cmd_validate_tle(args):
    try:
        text = args.path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputDataError(f"cannot read {args.path}: {exc}") from None
    records = parse_tle(text, strict=args.strict_tle)
    print(f"{len(records)} valid records in {args.path}")


COMMANDS = {
    "snapshot": _cmd_snapshot,
    "metrics": _cmd_metrics,
    "timeseries": _cmd_timeseries,
    "sweep": _cmd_sweep,
    "walker-gen": _cmd_walker_gen,
    "show-config": _cmd_show_config,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate-tle":
            _cmd_validate_tle(args)
        else:
            COMMANDS[args.command](args, resolve_config(args))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (InputDataError, DomainError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except LeoCascadeError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit code 3
        log.debug("unhandled", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
