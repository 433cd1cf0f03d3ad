import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leocascade.config import (
    SCHEMA,
    SimConfig,
    dump_config,
    load_config,
    loads_config,
    time_grid,
)
from leocascade.errors import ConfigError


def test_empty_text_gives_defaults():
    cfg = loads_config("")
    assert dump_config(cfg) == dump_config(SimConfig())
    assert cfg["alpha_grid"] == (0.6, 0.7, 0.8, 0.9, 1.0)
    assert cfg["seeds"] == tuple(range(1, 21))
    assert cfg["step_minutes"] == 22.0


def test_comments_and_whitespace():
    cfg = loads_config("# header\n\n  step_minutes =  15   # inline\nseeds = 1-3\n")
    assert cfg["step_minutes"] == 15.0
    assert cfg["seeds"] == (1, 2, 3)


def test_alpha_out_of_range_names_key():
    with pytest.raises(ConfigError) as err:
        loads_config("alpha_grid = 0.6, 1.5")
    assert err.value.key == "alpha_grid"
    assert "alpha_grid" in str(err.value)


@pytest.mark.parametrize("text,key", [
    ("no_such_key = 1", "no_such_key"),
    ("step_minutes = 0", "step_minutes"),
    ("step_minutes = fast", "step_minutes"),
    ("attack_fractions = 0.01, 0.005", "attack_fractions"),
    ("metrics_under_test = hbc, closeness", "metrics_under_test"),
    ("seeds = 1, 1", "seeds"),
    ("seeds = 101", "risk.trial_seeds"),
    ("constellation.source = tle", "constellation.tle_path"),
    ("start_time = yesterday", "start_time"),
    ("constellation.walker.planes = 7", "constellation.walker.planes"),
])
def test_invalid_values_name_their_key(text, key):
    with pytest.raises(ConfigError) as err:
        loads_config(text)
    assert err.value.key == key


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError) as err:
        loads_config("step_minutes = 10\nstep_minutes = 12\n")
    assert err.value.key == "step_minutes"


def test_line_without_equals_rejected():
    with pytest.raises(ConfigError):
        loads_config("step_minutes 10")


def test_missing_file_names_flag(tmp_path):
    with pytest.raises(ConfigError) as err:
        load_config(tmp_path / "absent.cfg")
    assert err.value.key == "--config"


def test_load_from_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("horizon_minutes = 30\nstep_minutes = 15\n")
    assert load_config(p).time_grid_minutes() == [0.0, 15.0, 30.0]
    assert load_config(None)["horizon_minutes"] == 90.0


def test_dump_is_canonical_and_round_trips():
    text = dump_config(SimConfig())
    keys = [line.split(" = ")[0] for line in text.splitlines()]
    assert keys == sorted(SCHEMA)
    assert dump_config(loads_config(text)) == text
    custom = loads_config("alpha_grid = 0.65, 0.9\nseeds = 3,5,7\ncascade.max_iter = 9\n"
                          "traffic.target_load = 0.55\ntopology.expand = false\n")
    again = loads_config(dump_config(custom))
    assert dump_config(again) == dump_config(custom)
    assert again["alpha_grid"] == (0.65, 0.9)
    assert again["topology.expand"] is False


@settings(max_examples=50)
@given(st.lists(st.floats(0.0, 1.0, allow_subnormal=False), min_size=1, max_size=6),
       st.floats(0.01, 1.99), st.integers(1, 200))
def test_round_trip_property(alphas, load, max_iter):
    cfg = SimConfig().with_values({"alpha_grid": tuple(alphas), "traffic.target_load": load,
                                   "cascade.max_iter": max_iter})
    back = loads_config(dump_config(cfg))
    assert back["alpha_grid"] == pytest.approx(cfg["alpha_grid"], rel=1e-15)
    assert back["traffic.target_load"] == pytest.approx(load, rel=1e-15)
    assert back["cascade.max_iter"] == max_iter
    assert dump_config(back) == dump_config(cfg)


def test_unknown_key_in_mapping_rejected():
    with pytest.raises(ConfigError):
        SimConfig({"bogus": 1})


def test_time_grid_examples():
    assert time_grid(90, 30) == [0.0, 30.0, 60.0, 90.0]
    # the last sample snaps to the end of the horizon
    assert time_grid(90, 22) == [0.0, 22.0, 44.0, 66.0, 88.0, 90.0]
    assert time_grid(0, 22) == [0.0]
    assert len(time_grid(4320, 15)) == 289
    with pytest.raises(ConfigError):
        time_grid(90, 0)


def test_typed_views():
    cfg = SimConfig()
    assert cfg.walker().total == 1584
    assert cfg.capacity().isl == 40_000.0
    assert cfg.cascade().max_iter == 50
    assert cfg.demand().target_load == 0.7
