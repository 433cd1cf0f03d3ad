"""Satellite element sources: NORAD two-line element files and Walker Delta shells."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .errors import ConfigError, TleParseError
from .orbital import (
    R_EARTH,
    EpochTime,
    MeanElements,
    propagate_circular_array,
    propagate_tle_array,
    teme_to_ecef_array,
)

log = logging.getLogger(__name__)

TLE_LINE_LENGTH = 69


@dataclass(frozen=True)
class TleRecord:
    name: str
    line1: str
    line2: str
    parsed: MeanElements
    catalog_number: int


@dataclass(frozen=True)
class WalkerParams:
    inclination: float
    total: int
    planes: int
    phasing: int
    altitude: float

    def validate(self):
        if self.total < 1 or self.planes < 1:
            raise ConfigError("constellation.walker", "total and planes must be positive")
        if self.total % self.planes:
            raise ConfigError("constellation.walker.planes",
                              f"{self.planes} planes do not divide {self.total} satellites")
        if not 0 <= self.phasing < self.total:
            raise ConfigError("constellation.walker.phasing", "phasing must lie in [0, total)")


def tle_checksum(line: str) -> int:
    total = 0
    for ch in line[:68]:
        if ch.isdigit():
            total += int(ch)
        elif ch == "-":
            total += 1
    return total % 10


def _field(line, start, end, line_number, label, convert=float):
    """Decode 1-indexed inclusive columns ``start..end``."""
    raw = line[start - 1:end]
    try:
        return convert(raw)
    except ValueError:
        raise TleParseError(line_number, f"cannot parse {label} from {raw!r}") from None


def _implied_exponent(raw: str) -> float:
    # " 12345-3" -> 0.12345e-3
    raw = raw.strip()
    if not raw:
        return 0.0
    sign = -1.0 if raw[0] == "-" else 1.0
    body = raw.lstrip("+-")
    mantissa, exponent = body[:-2], body[-2:]
    if not mantissa:
        return 0.0
    return sign * float(f"0.{mantissa}e{int(exponent)}")


def _epoch_from_tle(year2: int, day_of_year: float) -> EpochTime:
    year = 2000 + year2 if year2 < 57 else 1900 + year2
    start = datetime(year, 1, 1, tzinfo=timezone.utc)
    return EpochTime(EpochTime.from_datetime(start).ms + round((day_of_year - 1.0) * 86_400_000))


def _check_line(line, expected_no, line_number):
    if len(line) != TLE_LINE_LENGTH:
        raise TleParseError(line_number, f"expected {TLE_LINE_LENGTH} characters, got {len(line)}")
    if line[0] != str(expected_no):
        raise TleParseError(line_number, f"line number must be {expected_no}")
    if not line[68].isdigit() or int(line[68]) != tle_checksum(line):
        raise TleParseError(line_number, f"checksum mismatch (computed {tle_checksum(line)})")


def _parse_record(name, line1, line2, first_line_no) -> TleRecord:
    n1, n2 = first_line_no, first_line_no + 1
    _check_line(line1, 1, n1)
    _check_line(line2, 2, n2)
    catalog = _field(line1, 3, 7, n1, "catalog number", int)
    year2 = _field(line1, 19, 20, n1, "epoch year", int)
    day = _field(line1, 21, 32, n1, "epoch day")
    try:
        bstar = _implied_exponent(line1[53:61])
    except ValueError:
        raise TleParseError(n1, f"cannot parse bstar from {line1[53:61]!r}") from None
    inc = _field(line2, 9, 16, n2, "inclination")
    raan = _field(line2, 18, 25, n2, "RAAN")
    ecc = _field(line2, 27, 33, n2, "eccentricity", lambda s: float("0." + s.strip()))
    argp = _field(line2, 35, 42, n2, "argument of perigee")
    mean_anom = _field(line2, 44, 51, n2, "mean anomaly")
    mean_motion = _field(line2, 53, 63, n2, "mean motion")
    if mean_motion <= 0:
        raise TleParseError(n2, "mean motion must be positive")
    elements = MeanElements.from_mean_motion(
        mean_motion, eccentricity=ecc, inclination=inc, raan=raan, arg_perigee=argp,
        mean_anomaly=mean_anom, bstar=bstar, epoch=_epoch_from_tle(year2, day))
    return TleRecord(name=name or f"{catalog:05d}", line1=line1, line2=line2,
                     parsed=elements, catalog_number=catalog)


def parse_tle(text: str, strict: bool = True) -> list[TleRecord]:
    """Parse 2- or 3-line TLE text into records, in file order.

    In lenient mode malformed records are logged and skipped.
    """
    lines = [(i + 1, ln.rstrip()) for i, ln in enumerate(text.splitlines()) if ln.strip()]
    if not lines:
        raise TleParseError(0, "empty TLE text")
    records: list[TleRecord] = []
    i = 0
    while i < len(lines):
        no, line = lines[i]
        name = ""
        if not line.startswith("1 "):
            name = line.strip()
            if name.startswith("0 "):
                name = name[2:].strip()
            i += 1
        if i + 1 >= len(lines):
            err = TleParseError(no, "truncated record")
            if strict:
                raise err
            log.warning("skipping TLE record: %s", err)
            break
        no1, l1 = lines[i]
        l2 = lines[i + 1][1]
        try:
            records.append(_parse_record(name, l1, l2, no1))
            i += 2
        except TleParseError as err:
            if strict:
                raise
            log.warning("skipping TLE record: %s", err)
            # resynchronise on the next line that is not an element line
            i += 1
            while i < len(lines) and lines[i][1][:2] in ("1 ", "2 "):
                i += 1
    return records


def _with_checksum(body68: str) -> str:
    return body68 + str(tle_checksum(body68))


def render_tle(elements: MeanElements, catalog_number: int, name: str = "") -> str:
    """Format elements as a 3-line TLE (synthetic records; drag terms zeroed)."""
    dt = elements.epoch.to_datetime()
    start = datetime(dt.year, 1, 1, tzinfo=timezone.utc)
    day = (dt - start).total_seconds() / 86400.0 + 1.0
    ecc = f"{elements.eccentricity:.7f}"[2:]
    line1 = (f"1 {catalog_number:05d}U 00000A   {dt.year % 100:02d}{day:012.8f} "
             f" .00000000  00000-0  00000-0 0  999")
    line2 = (f"2 {catalog_number:05d} {elements.inclination % 360:8.4f} "
             f"{elements.raan % 360:8.4f} {ecc} {elements.arg_perigee % 360:8.4f} "
             f"{elements.mean_anomaly % 360:8.4f} {elements.mean_motion:11.8f}00000")
    line1 = _with_checksum(line1[:68])
    line2 = _with_checksum(line2[:68])
    return f"{name or f'SAT-{catalog_number:05d}'}\n{line1}\n{line2}\n"


def generate_walker(p: WalkerParams, epoch: EpochTime) -> list[MeanElements]:
    """Walker Delta i:T/P/F shell, plane-major order."""
    p.validate()
    per_plane = p.total // p.planes
    a = R_EARTH + p.altitude
    out = []
    for k in range(p.planes):
        raan = k * 360.0 / p.planes
        for m in range(per_plane):
            anomaly = (m * 360.0 * p.planes / p.total + k * p.phasing * 360.0 / p.total) % 360.0
            out.append(MeanElements.from_semi_major_axis(
                a, eccentricity=0.0, inclination=p.inclination, raan=raan,
                arg_perigee=0.0, mean_anomaly=anomaly, bstar=0.0, epoch=epoch))
    return out


def constellation_positions(source, t: EpochTime, mode: str = "two_body") -> np.ndarray:
    """ECEF positions (N, 3) km for every element set at time t."""
    if mode == "two_body":
        teme = propagate_circular_array(source, t)
    elif mode == "j2":
        teme = propagate_tle_array(source, t)
    else:
        raise ConfigError("constellation.mode", f"unknown propagation mode {mode!r}")
    return teme_to_ecef_array(teme, t)


def satellite_ids(count: int) -> list[str]:
    width = max(4, len(str(count - 1)))
    return [f"S{i:0{width}d}" for i in range(count)]


def min_pairwise_distance(points: np.ndarray) -> float:
    from scipy.spatial import cKDTree

    if len(points) < 2:
        return math.inf
    dist, _ = cKDTree(points).query(points, k=2)
    return float(dist[:, 1].min())
