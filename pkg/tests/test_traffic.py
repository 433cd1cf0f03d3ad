import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leocascade.errors import ConfigError, DomainError
from leocascade.orbital import EpochTime
from leocascade.topology import Edge, EdgeKind, Node, NodeKind, Snapshot
from leocascade.traffic import (
    DemandProfile,
    Flow,
    diurnal_factor,
    generate_flows,
    reference_capacity,
    scale_demands,
)

MIDNIGHT = EpochTime.from_iso("2024-03-01T00:00:00Z")


def at_utc(hour):
    return MIDNIGHT.plus_seconds(hour * 3600.0)


def two_city_snapshot(beta_a=1.0, beta_b=0.3, pop_a=1.0, pop_b=1.0, lon=0.0):
    nodes = [
        Node("S0", NodeKind.SATELLITE, capacity=1e5),
        Node("S0/B00", NodeKind.USER_BEAM, capacity=2000.0, parent="S0"),
        Node("S0/FGW", NodeKind.FEEDER_BEAM, capacity=2000.0, parent="S0"),
        Node("GW", NodeKind.GATEWAY, capacity=5e4, geodetic=(0.0, lon, 0.0)),
        Node("UA", NodeKind.USER, geodetic=(0.0, lon, 0.0), pop_weight=pop_a, beta=beta_a),
        Node("UB", NodeKind.USER, geodetic=(0.0, lon, 0.0), pop_weight=pop_b, beta=beta_b),
    ]
    edges = [
        Edge("S0/B00", "S0", EdgeKind.INTERNAL, 2000.0, 0.0, 0.0),
        Edge("S0/FGW", "S0", EdgeKind.INTERNAL, 2000.0, 0.0, 0.0),
        Edge("S0/FGW", "GW", EdgeKind.FEEDER, 2000.0, 0.0, 0.0),
        Edge("UA", "S0/B00", EdgeKind.ACCESS, 2000.0, 0.0, 0.0),
        Edge("UB", "S0/B00", EdgeKind.ACCESS, 2000.0, 0.0, 0.0),
    ]
    return Snapshot(MIDNIGHT, tuple(nodes), tuple(edges))


def test_diurnal_peak_symmetry_and_wraparound():
    assert diurnal_factor(0.0, at_utc(21.0)) == pytest.approx(1.0)
    assert diurnal_factor(0.0, at_utc(20.0)) == pytest.approx(diurnal_factor(0.0, at_utc(22.0)))
    assert diurnal_factor(0.0, at_utc(9.0), sigma_hours=3.0, floor=0.0) == pytest.approx(math.exp(-8))
    # 15 degrees east is one hour ahead
    assert diurnal_factor(15.0, at_utc(20.0)) == pytest.approx(1.0)


@given(st.floats(-180.0, 179.99), st.floats(0.0, 23.99))
def test_diurnal_is_periodic_and_bounded(lon, hour):
    f = diurnal_factor(lon, at_utc(hour))
    assert 0.0 < f <= 1.0
    assert diurnal_factor(lon, at_utc(hour + 24.0)) == pytest.approx(f, rel=1e-9)


def test_diurnal_continuous_across_midnight():
    before = diurnal_factor(0.0, at_utc(23.999))
    after = diurnal_factor(0.0, at_utc(24.001))
    assert abs(before - after) < 1e-3


def test_adoption_ratio_ten_to_three():
    flows = generate_flows(two_city_snapshot(), DemandProfile(), at_utc(12.0), seed=1, scale=False)
    d = {f.user: f.demand for f in flows}
    assert d["UA"] / d["UB"] == pytest.approx(10 / 3)


def test_zero_adoption_gives_zero_demand():
    flows = generate_flows(two_city_snapshot(0.0, 0.0), DemandProfile(), at_utc(12.0), seed=1)
    assert all(f.demand == 0.0 for f in flows)


def test_flows_deterministic_under_seed():
    snap = two_city_snapshot()
    a = generate_flows(snap, DemandProfile(), at_utc(3.0), seed=9)
    b = generate_flows(snap, DemandProfile(), at_utc(3.0), seed=9)
    assert a == b


def test_no_gateway_is_configuration_error():
    snap = two_city_snapshot()
    bare = Snapshot(snap.time, tuple(n for n in snap.nodes if n.kind != NodeKind.GATEWAY),
                    tuple(e for e in snap.edges if e.kind != EdgeKind.FEEDER))
    with pytest.raises(ConfigError):
        generate_flows(bare, DemandProfile(), MIDNIGHT, seed=1)


def test_scaled_total_matches_target():
    snap = two_city_snapshot()
    flows = generate_flows(snap, DemandProfile(target_load=0.5), at_utc(5.0), seed=3)
    assert reference_capacity(snap) == 2000.0
    assert math.fsum(f.demand for f in flows) == pytest.approx(1000.0, rel=1e-9)


def test_scale_examples():
    out = scale_demands([Flow("a", "g", 1.0), Flow("b", "g", 2.0), Flow("c", "g", 3.0)], 1.0, 60.0)
    assert [f.demand for f in out] == pytest.approx([10.0, 20.0, 30.0])
    out = scale_demands([Flow("a", "g", 3.0), Flow("b", "g", 7.0)], 0.5, 10_000.0)
    assert math.fsum(f.demand for f in out) == pytest.approx(5000.0, rel=1e-9)
    with pytest.raises(DomainError):
        scale_demands([Flow("a", "g", 0.0)], 0.5, 100.0)


@given(st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=30),
       st.floats(0.01, 2.0), st.floats(1.0, 1e6))
def test_scaling_hits_target_and_keeps_ratios(raw, load, ref):
    flows = [Flow(f"u{i}", "g", d) for i, d in enumerate(raw)]
    out = scale_demands(flows, load, ref)
    assert math.fsum(f.demand for f in out) == pytest.approx(load * ref, rel=1e-9)
    for a, b in zip(out, flows):
        assert a.demand / out[0].demand == pytest.approx(b.demand / flows[0].demand, rel=1e-12)


@settings(max_examples=40)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.1, 10.0), st.floats(0.0, 23.9))
def test_raw_demand_monotone_in_beta_and_population(b1, b2, pop, hour):
    lo, hi = sorted((b1, b2))
    flows = generate_flows(two_city_snapshot(hi, lo, pop, pop), DemandProfile(), at_utc(hour),
                           seed=0, scale=False)
    d = {f.user: f.demand for f in flows}
    assert d["UA"] >= d["UB"]
    flows = generate_flows(two_city_snapshot(0.5, 0.5, pop * 2, pop), DemandProfile(),
                           at_utc(hour), seed=0, scale=False)
    d = {f.user: f.demand for f in flows}
    assert d["UA"] >= d["UB"]


def test_profile_rejects_bad_target_load():
    with pytest.raises(ConfigError):
        DemandProfile(target_load=2.5)
