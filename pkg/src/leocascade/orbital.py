"""Orbit propagation, Earth frames and visibility geometry.

All distances are km, angles are degrees unless a name says ``_rad``.
Array helpers accept ``(N, 3)`` position arrays; the scalar functions wrap
them for single points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DomainError, StaleElementsError, UnsupportedInputError

MU_EARTH = 398600.4418  # km^3/s^2
R_EARTH = 6378.137  # km, equatorial radius (spherical model)
J2 = 1.08262668e-3
SPEED_OF_LIGHT = 299792.458  # km/s
SIDEREAL_DAY = 86164.0905  # s

WGS84_A = 6378.137
WGS84_F = 1.0 / 298.257223563
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)

_UNIX_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_J2000_MS = 946728000000  # 2000-01-01T12:00:00Z in ms since the Unix epoch
_MS_PER_DAY = 86_400_000
_JD_UNIX_EPOCH = 2440587.5
_GMST_MIN_YEAR, _GMST_MAX_YEAR = 1990, 2060


@dataclass(frozen=True, order=True)
class EpochTime:
    """UTC instant with millisecond resolution (ms since 1970-01-01T00:00Z)."""

    ms: int

    @classmethod
    def from_datetime(cls, dt: datetime) -> "EpochTime":
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        delta = dt - _UNIX_EPOCH
        ms = (delta.days * 86400 + delta.seconds) * 1000 + delta.microseconds // 1000
        return cls(ms)

    @classmethod
    def from_iso(cls, text: str) -> "EpochTime":
        text = text.strip()
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        return cls.from_datetime(datetime.fromisoformat(text))

    @classmethod
    def from_seconds(cls, seconds: float) -> "EpochTime":
        return cls(int(round(seconds * 1000)))

    def to_datetime(self) -> datetime:
        return datetime.fromtimestamp(self.ms / 1000, tz=timezone.utc)

    def isoformat(self) -> str:
        dt = self.to_datetime()
        return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{self.ms % 1000:03d}Z"

    @property
    def seconds(self) -> float:
        return self.ms / 1000.0

    def jd_parts(self) -> tuple[float, float]:
        """Julian Date split as (integer-ish part, day fraction), exact to 1 ms."""
        days, rem = divmod(self.ms, _MS_PER_DAY)
        return _JD_UNIX_EPOCH + days, rem / _MS_PER_DAY

    @property
    def jd(self) -> float:
        whole, frac = self.jd_parts()
        return whole + frac

    def plus_seconds(self, seconds: float) -> "EpochTime":
        return EpochTime(self.ms + int(round(seconds * 1000)))

    def minus(self, other: "EpochTime") -> float:
        """Difference in seconds."""
        return (self.ms - other.ms) / 1000.0

    @property
    def utc_hour(self) -> float:
        return (self.ms % _MS_PER_DAY) / 3_600_000.0


class EcefPosition(NamedTuple):
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


class TemePosition(NamedTuple):
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


class GeodeticPosition(NamedTuple):
    lat: float
    lon: float
    alt: float = 0.0


@dataclass(frozen=True)
class MeanElements:
    semi_major_axis: float
    eccentricity: float
    inclination: float
    raan: float
    arg_perigee: float
    mean_anomaly: float
    mean_motion: float
    bstar: float
    epoch: EpochTime

    @classmethod
    def from_mean_motion(cls, mean_motion: float, **kwargs) -> "MeanElements":
        return cls(semi_major_axis=semi_major_axis_from_mean_motion(mean_motion),
                   mean_motion=mean_motion, **kwargs)

    @classmethod
    def from_semi_major_axis(cls, semi_major_axis: float, **kwargs) -> "MeanElements":
        return cls(semi_major_axis=semi_major_axis,
                   mean_motion=mean_motion_from_semi_major_axis(semi_major_axis), **kwargs)


def semi_major_axis_from_mean_motion(rev_per_day: float) -> float:
    if rev_per_day <= 0:
        raise DomainError("mean motion must be positive")
    n = rev_per_day * 2.0 * math.pi / 86400.0
    return (MU_EARTH / (n * n)) ** (1.0 / 3.0)


def mean_motion_from_semi_major_axis(a: float) -> float:
    """Mean motion in rev/day."""
    return math.sqrt(MU_EARTH / a**3) * 86400.0 / (2.0 * math.pi)


def orbital_period(a: float) -> float:
    return 2.0 * math.pi * math.sqrt(a**3 / MU_EARTH)


# ---------------------------------------------------------------------------
# Earth rotation


def gmst(t: EpochTime) -> float:
    """Greenwich Mean Sidereal Time (IAU 1982) in radians, UT1 taken as UTC."""
    year = t.to_datetime().year
    if not _GMST_MIN_YEAR <= year <= _GMST_MAX_YEAR:
        raise DomainError(f"epoch year {year} outside {_GMST_MIN_YEAR}-{_GMST_MAX_YEAR}")
    tu = (t.ms - _J2000_MS) / _MS_PER_DAY / 36525.0
    seconds = (67310.54841
               + (876600.0 * 3600.0 + 8640184.812866) * tu
               + 0.093104 * tu * tu
               - 6.2e-6 * tu * tu * tu)
    return (seconds % 86400.0) / 86400.0 * 2.0 * math.pi


def rotate_z(points: np.ndarray, angle: float) -> np.ndarray:
    """Rotate row vectors by ``-angle`` about +z (inertial to Earth-fixed sense)."""
    c, s = math.cos(angle), math.sin(angle)
    pts = np.asarray(points, dtype=float)
    out = np.empty_like(pts)
    out[..., 0] = c * pts[..., 0] + s * pts[..., 1]
    out[..., 1] = -s * pts[..., 0] + c * pts[..., 1]
    out[..., 2] = pts[..., 2]
    return out


def teme_to_ecef_array(points: np.ndarray, t: EpochTime) -> np.ndarray:
    return rotate_z(points, gmst(t))


def teme_to_ecef(p: TemePosition, t: EpochTime) -> EcefPosition:
    return EcefPosition(*rotate_z(np.asarray(p, dtype=float), gmst(t)))


# ---------------------------------------------------------------------------
# Propagation


def _perifocal_to_inertial(r_pf: np.ndarray, inc, raan, argp) -> np.ndarray:
    """Rotate perifocal (x toward perigee) vectors into the inertial frame.

    Arrays broadcast over satellites; angles in radians.
    """
    ci, si = np.cos(inc), np.sin(inc)
    co, so = np.cos(raan), np.sin(raan)
    cw, sw = np.cos(argp), np.sin(argp)
    px, py = r_pf[..., 0], r_pf[..., 1]
    x = (co * cw - so * sw * ci) * px + (-co * sw - so * cw * ci) * py
    y = (so * cw + co * sw * ci) * px + (-so * sw + co * cw * ci) * py
    z = (sw * si) * px + (cw * si) * py
    return np.stack([x, y, z], axis=-1)


def _solve_kepler(mean_anom: np.ndarray, ecc: np.ndarray) -> np.ndarray:
    e_anom = np.where(ecc < 0.8, mean_anom, np.pi)
    for _ in range(50):
        f = e_anom - ecc * np.sin(e_anom) - mean_anom
        step = f / (1.0 - ecc * np.cos(e_anom))
        e_anom = e_anom - step
        if np.all(np.abs(step) < 1e-14):
            break
    return e_anom


def _element_arrays(elements):
    a = np.array([el.semi_major_axis for el in elements], dtype=float)
    e = np.array([el.eccentricity for el in elements], dtype=float)
    inc = np.radians([el.inclination for el in elements])
    raan = np.radians([el.raan for el in elements])
    argp = np.radians([el.arg_perigee for el in elements])
    m0 = np.radians([el.mean_anomaly for el in elements])
    epoch_ms = np.array([el.epoch.ms for el in elements], dtype=np.int64)
    return a, e, inc, raan, argp, m0, epoch_ms


def propagate_circular_array(elements, t: EpochTime) -> np.ndarray:
    """Two-body circular propagation of many element sets, TEME km."""
    if not elements:
        return np.zeros((0, 3))
    a, e, inc, raan, argp, m0, epoch_ms = _element_arrays(elements)
    if np.any(e != 0.0):
        raise UnsupportedInputError("circular propagation requires eccentricity 0")
    dt = (t.ms - epoch_ms) / 1000.0
    n = np.sqrt(MU_EARTH / a**3)
    u = argp + m0 + n * dt
    r_pf = np.stack([a * np.cos(u), a * np.sin(u)], axis=-1)
    return _perifocal_to_inertial(r_pf, inc, raan, 0.0)


def propagate_circular(el: MeanElements, t: EpochTime) -> TemePosition:
    return TemePosition(*propagate_circular_array([el], t)[0])


def j2_secular_rates(a, e, inc_rad, j2=J2):
    """Secular drift rates (rad/s) of RAAN, argument of perigee and mean anomaly."""
    n = np.sqrt(MU_EARTH / np.asarray(a, dtype=float) ** 3)
    p = a * (1.0 - e * e)
    k = 1.5 * j2 * n * (R_EARTH / p) ** 2
    cos_i = np.cos(inc_rad)
    raan_dot = -k * cos_i
    argp_dot = 0.5 * k * (5.0 * cos_i**2 - 1.0)
    m_dot = n + 0.5 * k * np.sqrt(1.0 - e * e) * (3.0 * cos_i**2 - 1.0)
    return raan_dot, argp_dot, m_dot


MAX_ELEMENT_AGE_S = 10 * 86400.0


def propagate_tle_array(elements, t: EpochTime, j2: float = J2) -> np.ndarray:
    """Keplerian propagation with secular J2 drift of the node, perigee and mean anomaly.

    Stands in for SGP4 behind the same call shape. ``j2=0`` reduces it to
    plain two-body motion.
    """
    if not elements:
        return np.zeros((0, 3))
    a, e, inc, raan, argp, m0, epoch_ms = _element_arrays(elements)
    dt = (t.ms - epoch_ms) / 1000.0
    if np.any(np.abs(dt) >= MAX_ELEMENT_AGE_S):
        raise StaleElementsError("elements are 10 days or more away from the requested time")
    raan_dot, argp_dot, m_dot = j2_secular_rates(a, e, inc, j2)
    raan_t = raan + raan_dot * dt
    argp_t = argp + argp_dot * dt
    mean_t = np.mod(m0 + m_dot * dt, 2.0 * np.pi)
    e_anom = _solve_kepler(mean_t, e)
    x_pf = a * (np.cos(e_anom) - e)
    y_pf = a * np.sqrt(1.0 - e * e) * np.sin(e_anom)
    return _perifocal_to_inertial(np.stack([x_pf, y_pf], axis=-1), inc, raan_t, argp_t)


def propagate_tle(el: MeanElements, t: EpochTime, j2: float = J2) -> TemePosition:
    return TemePosition(*propagate_tle_array([el], t, j2)[0])


# ---------------------------------------------------------------------------
# Geodesy


def geodetic_to_ecef_array(lat, lon, alt=0.0) -> np.ndarray:
    lat_r = np.radians(lat)
    lon_r = np.radians(lon)
    sin_lat = np.sin(lat_r)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sin_lat**2)
    x = (n + alt) * np.cos(lat_r) * np.cos(lon_r)
    y = (n + alt) * np.cos(lat_r) * np.sin(lon_r)
    z = (n * (1.0 - WGS84_E2) + alt) * sin_lat
    return np.stack(np.broadcast_arrays(x, y, z), axis=-1)


def geodetic_to_ecef(g: GeodeticPosition) -> EcefPosition:
    return EcefPosition(*geodetic_to_ecef_array(g.lat, g.lon, g.alt))


def ecef_to_geodetic(p: EcefPosition) -> GeodeticPosition:
    x, y, z = p
    lon = math.degrees(math.atan2(y, x))
    rho = math.hypot(x, y)
    lat = math.atan2(z, rho * (1.0 - WGS84_E2))
    alt = 0.0
    for _ in range(10):
        sin_lat = math.sin(lat)
        n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
        if abs(math.cos(lat)) > 1e-10:
            alt = rho / math.cos(lat) - n
        else:
            alt = abs(z) - n * (1.0 - WGS84_E2)
        lat = math.atan2(z, rho * (1.0 - WGS84_E2 * n / (n + alt)))
    if lon >= 180.0:
        lon -= 360.0
    return GeodeticPosition(math.degrees(lat), lon, alt)


def subpoint_array(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Geocentric (lat, lon) in degrees of the sub-satellite points."""
    pts = np.asarray(points, dtype=float)
    lat = np.degrees(np.arctan2(pts[..., 2], np.hypot(pts[..., 0], pts[..., 1])))
    lon = np.degrees(np.arctan2(pts[..., 1], pts[..., 0]))
    return lat, lon


def enu_basis(lat, lon):
    """East, north, up unit vectors for geodetic coordinates (degrees)."""
    la, lo = np.radians(lat), np.radians(lon)
    sl, cl = np.sin(la), np.cos(la)
    so, co = np.sin(lo), np.cos(lo)
    east = np.stack(np.broadcast_arrays(-so, co, np.zeros_like(so)), axis=-1)
    north = np.stack(np.broadcast_arrays(-sl * co, -sl * so, cl), axis=-1)
    up = np.stack(np.broadcast_arrays(cl * co, cl * so, sl), axis=-1)
    return east, north, up


def elevation_array(ground_ecef: np.ndarray, up: np.ndarray, sats: np.ndarray) -> np.ndarray:
    """Elevation (deg) of every satellite from every ground point, shape (G, S)."""
    rho = sats[None, :, :] - ground_ecef[:, None, :]
    dist = np.linalg.norm(rho, axis=-1)
    vertical = np.einsum("gsk,gk->gs", rho, up)
    # atan2 of vertical over horizontal stays accurate near the zenith
    horizontal = np.linalg.norm(rho - vertical[..., None] * up[:, None, :], axis=-1)
    el = np.degrees(np.arctan2(vertical, horizontal))
    return np.where(dist > 0, el, 90.0)


def elevation_angle(g: GeodeticPosition, s: EcefPosition) -> float:
    ground = geodetic_to_ecef_array(g.lat, g.lon, g.alt)
    _, _, up = enu_basis(g.lat, g.lon)
    return float(elevation_array(ground[None, :], up[None, :], np.asarray(s, float)[None, :])[0, 0])


def azimuth_deg(from_lat, from_lon, to_lat, to_lon):
    """Initial great-circle bearing, degrees clockwise from true north in [0, 360)."""
    p1, p2 = np.radians(from_lat), np.radians(to_lat)
    dl = np.radians(np.asarray(to_lon) - np.asarray(from_lon))
    y = np.sin(dl) * np.cos(p2)
    x = np.cos(p1) * np.sin(p2) - np.sin(p1) * np.cos(p2) * np.cos(dl)
    return np.mod(np.degrees(np.arctan2(y, x)), 360.0)


# ---------------------------------------------------------------------------
# Visibility


def line_of_sight(a, b, grazing_margin_km: float = 80.0, radius: float = R_EARTH) -> bool:
    """True iff segment a-b stays outside the sphere of radius ``radius + margin``."""
    pa = np.asarray(a, dtype=float)
    pb = np.asarray(b, dtype=float)
    return bool(line_of_sight_array(pa[None, :], pb[None, :], grazing_margin_km, radius)[0])


def line_of_sight_array(a: np.ndarray, b: np.ndarray, grazing_margin_km: float = 80.0,
                        radius: float = R_EARTH) -> np.ndarray:
    d = b - a
    dd = np.einsum("ij,ij->i", d, d)
    t = np.where(dd > 0, -np.einsum("ij,ij->i", a, d) / np.where(dd > 0, dd, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[:, None] * d
    return np.linalg.norm(closest, axis=1) > radius + grazing_margin_km


def propagation_delay(distance_km: float) -> float:
    """One-way light time in milliseconds."""
    if distance_km < 0:
        raise DomainError("distance must be non-negative")
    return distance_km / SPEED_OF_LIGHT * 1000.0


SPACE_KINDS = frozenset({"satellite"})
GROUND_KINDS = frozenset({"gateway", "user"})


@dataclass(frozen=True)
class VisibilityConstraints:
    isl_max_km: float = 5000.0
    ground_max_km: float = 3000.0
    min_elevation_deg: float = 25.0
    grazing_margin_km: float = 80.0


class Endpoint(NamedTuple):
    kind: str
    ecef: EcefPosition
    geodetic: GeodeticPosition | None = None


def visibility(i: Endpoint, j: Endpoint, t: EpochTime | None = None,
               constraints: VisibilityConstraints = VisibilityConstraints()) -> bool:
    """Binary link feasibility between two positioned nodes at one instant.

    ``t`` is carried for interface symmetry; positions must already be at t.
    Space-space pairs need range and an unobstructed ray above the grazing
    shell. Ground-space pairs need range and the minimum elevation, which
    already implies the ray clears the Earth.
    """
    kinds = {i.kind, j.kind}
    dist = math.dist(i.ecef, j.ecef)
    if kinds <= SPACE_KINDS:
        return dist <= constraints.isl_max_km and line_of_sight(
            i.ecef, j.ecef, constraints.grazing_margin_km)
    if len(kinds & SPACE_KINDS) == 1 and len(kinds & GROUND_KINDS) == 1:
        ground, sat = (i, j) if i.kind in GROUND_KINDS else (j, i)
        geo = ground.geodetic or ecef_to_geodetic(ground.ecef)
        if dist == 0:
            return True
        return dist <= constraints.ground_max_km and elevation_angle(
            geo, sat.ecef) >= constraints.min_elevation_deg
    raise ConfigError("visibility", f"no link type for pairing {i.kind}-{j.kind}")
