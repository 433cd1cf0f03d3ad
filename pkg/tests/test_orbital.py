import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leocascade.errors import (
    ConfigError,
    DomainError,
    StaleElementsError,
    UnsupportedInputError,
)
from leocascade.orbital import (
    MU_EARTH,
    R_EARTH,
    Endpoint,
    EpochTime,
    GeodeticPosition,
    MeanElements,
    TemePosition,
    ecef_to_geodetic,
    elevation_angle,
    geodetic_to_ecef,
    gmst,
    j2_secular_rates,
    line_of_sight,
    orbital_period,
    propagate_circular,
    propagate_tle,
    propagation_delay,
    rotate_z,
    teme_to_ecef,
    visibility,
)

J2000 = EpochTime.from_iso("2000-01-01T12:00:00Z")
EPOCH = EpochTime.from_iso("2024-03-01T00:00:00Z")


def meeus_gmst(t: EpochTime) -> float:
    """Sidereal angle from the degree-form polynomial, evaluated independently."""
    d = t.jd - 2451545.0
    tc = d / 36525.0
    deg = 280.46061837 + 360.98564736629 * d + 0.000387933 * tc**2 - tc**3 / 38710000.0
    return math.radians(deg % 360.0)


def angle_diff(a, b):
    d = (a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def circ(a=6928.137, inc=53.0, raan=0.0, m=0.0, epoch=EPOCH):
    return MeanElements.from_semi_major_axis(a, eccentricity=0.0, inclination=inc, raan=raan,
                                             arg_perigee=0.0, mean_anomaly=m, bstar=0.0,
                                             epoch=epoch)


def test_epoch_julian_date_exact():
    assert J2000.jd == 2451545.0
    assert EPOCH.plus_seconds(0.001).ms - EPOCH.ms == 1


def test_gmst_at_j2000():
    assert abs(gmst(J2000) - 4.894961) < 1e-5
    assert angle_diff(gmst(J2000), meeus_gmst(J2000)) < 1e-5


def test_gmst_second_epoch_matches_oracle():
    t = EpochTime.from_iso("2024-01-01T00:00:00Z")
    assert angle_diff(gmst(t), meeus_gmst(t)) < 1e-5


def test_gmst_one_sidereal_day_is_full_turn():
    assert angle_diff(gmst(EPOCH), gmst(EPOCH.plus_seconds(86164.0905))) < 1e-4


def test_gmst_out_of_range_epoch():
    with pytest.raises(DomainError):
        gmst(EpochTime.from_iso("1985-01-01T00:00:00Z"))


def test_rotation_identity_and_quarter_turn():
    p = np.array([7000.0, 1.0, 2.0])
    assert np.allclose(rotate_z(p, 0.0), p)
    out = rotate_z(np.array([7000.0, 0.0, 0.0]), math.pi / 2)
    assert np.allclose(out, [0.0, -7000.0, 0.0], atol=1e-6)


def test_teme_to_ecef_preserves_norm_for_random_points():
    rng = np.random.default_rng(3)
    for p in rng.normal(scale=7000.0, size=(100, 3)):
        out = np.array(teme_to_ecef(TemePosition(*p), EPOCH))
        assert abs(np.linalg.norm(out) - np.linalg.norm(p)) <= 1e-9 * np.linalg.norm(p)


@given(st.integers(min_value=0, max_value=10**12))
def test_rotation_norm_property(ms_offset):
    t = EpochTime(EPOCH.ms + ms_offset % (10 * 365 * 86_400_000))
    p = np.array([6000.0, -2500.0, 3100.0])
    out = np.array(teme_to_ecef(TemePosition(*p), t))
    assert abs(np.linalg.norm(out) - np.linalg.norm(p)) <= 1e-9 * np.linalg.norm(p)


def test_period_at_550_km():
    a = 6928.137
    assert abs(orbital_period(a) - 5739) <= 1
    assert orbital_period(a) == pytest.approx(2 * math.pi * math.sqrt(a**3 / 398600.4418))


def test_mean_motion_consistency():
    el = circ()
    back = MeanElements.from_mean_motion(el.mean_motion, eccentricity=0.0, inclination=53.0,
                                         raan=0.0, arg_perigee=0.0, mean_anomaly=0.0,
                                         bstar=0.0, epoch=EPOCH)
    assert back.semi_major_axis == pytest.approx(el.semi_major_axis, rel=1e-6)


def test_circular_at_epoch_equatorial():
    p = propagate_circular(circ(inc=0.0), EPOCH)
    assert np.allclose(p, (6928.137, 0.0, 0.0), atol=1e-9)


def test_circular_periodicity():
    el = circ(raan=40.0, m=17.0)
    a = np.array(propagate_circular(el, EPOCH.plus_seconds(1000.0)))
    # millisecond clock: compare at a whole number of periods expressed in ms
    period = orbital_period(el.semi_major_axis)
    t1 = EpochTime(EPOCH.ms + 1_000_000)
    t2 = t1.plus_seconds(period)
    drift = (t2.ms - t1.ms) / 1000.0 - period
    b = np.array(propagate_circular(el, t2))
    c = np.array(propagate_circular(el, t1))
    speed = 2 * math.pi * el.semi_major_axis / period
    assert np.linalg.norm(b - c) <= 1e-6 + abs(drift) * speed
    assert np.linalg.norm(a) == pytest.approx(6928.137, abs=1e-6)


def test_circular_rejects_eccentric():
    el = MeanElements.from_semi_major_axis(7000.0, eccentricity=0.01, inclination=10.0, raan=0.0,
                                           arg_perigee=0.0, mean_anomaly=0.0, bstar=0.0,
                                           epoch=EPOCH)
    with pytest.raises(UnsupportedInputError):
        propagate_circular(el, EPOCH)


def test_tle_propagator_without_j2_matches_two_body():
    el = circ(raan=12.0, m=200.0)
    t = EPOCH.plus_seconds(3 * 3600.0)
    a = np.array(propagate_tle(el, t, j2=0.0))
    b = np.array(propagate_circular(el, t))
    assert np.linalg.norm(a - b) < 1e-6


def test_polar_orbit_has_no_nodal_drift():
    raan_dot, _, _ = j2_secular_rates(6928.137, 0.0, math.radians(90.0))
    assert abs(raan_dot) < 1e-15


def test_nodal_regression_rate():
    a, inc = 6928.137, math.radians(53.0)
    n = math.sqrt(MU_EARTH / a**3)
    oracle = -1.5 * 1.08262668e-3 * n * (R_EARTH / a) ** 2 * math.cos(inc)
    raan_dot, _, _ = j2_secular_rates(a, 0.0, inc)
    assert raan_dot == pytest.approx(oracle, rel=1e-12)
    # the closed form gives about -4.49 deg/day at this shell
    assert math.degrees(raan_dot) * 86400 == pytest.approx(-4.49, abs=0.02)


def test_stale_elements_rejected():
    with pytest.raises(StaleElementsError):
        propagate_tle(circ(), EPOCH.plus_seconds(11 * 86400.0))


def test_geodetic_round_trip():
    rng = np.random.default_rng(7)
    for lat, lon, alt in zip(rng.uniform(-89, 89, 50), rng.uniform(-180, 179.9, 50),
                             rng.uniform(0, 1999, 50)):
        back = ecef_to_geodetic(geodetic_to_ecef(GeodeticPosition(lat, lon, alt)))
        again = np.array(geodetic_to_ecef(back))
        assert np.linalg.norm(again - np.array(geodetic_to_ecef(GeodeticPosition(lat, lon, alt)))) < 1e-3


def test_elevation_overhead_horizon_and_antipode():
    g = GeodeticPosition(30.0, 40.0, 0.0)
    ground = np.array(geodetic_to_ecef(g))
    lat, lon = math.radians(30.0), math.radians(40.0)
    up = np.array([math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)])
    assert elevation_angle(g, tuple(ground + 550.0 * up)) == pytest.approx(90.0, abs=1e-6)
    east = np.array([-math.sin(lon), math.cos(lon), 0.0])
    assert elevation_angle(g, tuple(ground + 1000.0 * east)) == pytest.approx(0.0, abs=1e-3)
    assert elevation_angle(g, tuple(-ground * 1.1)) < 0


def test_line_of_sight_examples():
    r = R_EARTH + 550.0
    a = (r, 0.0, 0.0)
    ang = 100.0 / r
    b = (r * math.cos(ang), r * math.sin(ang), 0.0)
    assert line_of_sight(a, b)
    assert not line_of_sight(a, (-r, 0.0, 0.0))
    assert line_of_sight(a, a)


@settings(max_examples=60)
@given(st.floats(0.0, 2 * math.pi), st.floats(0.0, 2 * math.pi),
       st.floats(200.0, 1500.0), st.floats(1.0, 500.0))
def test_line_of_sight_monotone_in_altitude(t1, t2, alt, lift):
    def pt(theta, h):
        return ((R_EARTH + h) * math.cos(theta), (R_EARTH + h) * math.sin(theta), 0.0)
    if line_of_sight(pt(t1, alt), pt(t2, alt)):
        assert line_of_sight(pt(t1, alt + lift), pt(t2, alt + lift))


def test_visibility_isl_range_and_symmetry():
    r = R_EARTH + 550.0
    half = math.asin(4999.0 / 2 / r)
    a = Endpoint("satellite", (r * math.cos(half), r * math.sin(half), 0.0))
    b = Endpoint("satellite", (r * math.cos(half), -r * math.sin(half), 0.0))
    assert visibility(a, b)
    assert visibility(b, a)
    assert visibility(a, a)
    half = math.asin(5001.0 / 2 / r)
    c = Endpoint("satellite", (r * math.cos(half), r * math.sin(half), 0.0))
    d = Endpoint("satellite", (r * math.cos(half), -r * math.sin(half), 0.0))
    assert not visibility(c, d)


def test_visibility_minimum_elevation():
    g = GeodeticPosition(0.0, 0.0, 0.0)
    ground = np.array(geodetic_to_ecef(g))
    el = math.radians(20.0)
    # 1000 km slant range at 20 degrees elevation toward +y
    sat = ground + 1000.0 * np.array([math.sin(el), math.cos(el), 0.0])
    user = Endpoint("user", tuple(ground), g)
    assert not visibility(user, Endpoint("satellite", tuple(sat)))
    el = math.radians(30.0)
    sat = ground + 1000.0 * np.array([math.sin(el), math.cos(el), 0.0])
    assert visibility(user, Endpoint("satellite", tuple(sat)))


def test_visibility_unknown_pairing():
    with pytest.raises(ConfigError):
        visibility(Endpoint("user", (0.0, 0.0, 0.0)), Endpoint("gateway", (1.0, 0.0, 0.0)))


def test_propagation_delay():
    assert propagation_delay(0.0) == 0.0
    assert propagation_delay(5000.0) == pytest.approx(16.678, abs=1e-3)
    assert propagation_delay(550.0) == pytest.approx(1.834, abs=1e-3)
    with pytest.raises(DomainError):
        propagation_delay(-1.0)
