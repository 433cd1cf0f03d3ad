import subprocess
import sys

import pytest

from leocascade import cli
from leocascade.config import SimConfig, dump_config, loads_config
from leocascade.constellation import parse_tle
from leocascade.errors import IntegrityError

SMALL_CFG = """
constellation.walker.total = 120
constellation.walker.planes = 12
constellation.walker.phasing = 1
ground.users = 60
seeds = 1-2
risk.trial_seeds = 101
metrics_under_test = hbc, random
alpha_grid = 0.8
attack_fractions = 0.01
horizon_minutes = 0
"""


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL_CFG)
    return p


def test_show_config_prints_defaults(capsys):
    assert cli.main(["show-config"]) == 0
    assert capsys.readouterr().out == dump_config(SimConfig())


def test_show_config_applies_overrides(small_cfg, capsys):
    assert cli.main(["show-config", "--config", str(small_cfg), "--seeds", "3,4",
                     "--max-iter", "7"]) == 0
    cfg = loads_config(capsys.readouterr().out)
    assert cfg["seeds"] == (3, 4)
    assert cfg["cascade.max_iter"] == 7
    assert cfg["constellation.walker.total"] == 120


def test_bad_config_exits_1(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("alpha_grid = 1.5\n")
    assert cli.main(["show-config", "--config", str(p)]) == 1
    assert "alpha_grid" in capsys.readouterr().err
    assert cli.main(["show-config", "--config", str(tmp_path / "nope.cfg")]) == 1
    assert cli.main(["show-config", "--time", "not-a-time"]) == 1


def test_bad_tle_exits_2(tmp_path, capsys):
    p = tmp_path / "bad.tle"
    p.write_text("SAT\n1 garbage\n2 garbage\n")
    assert cli.main(["validate-tle", str(p), "--strict-tle"]) == 2
    assert "line" in capsys.readouterr().err
    assert cli.main(["validate-tle", str(tmp_path / "missing.tle")]) == 2


def test_invariant_violation_exits_3(monkeypatch, capsys):
    def boom(args, cfg):
        raise IntegrityError("load recount mismatch")
    monkeypatch.setitem(cli.COMMANDS, "show-config", boom)
    assert cli.main(["show-config"]) == 3
    assert "load recount mismatch" in capsys.readouterr().err


def test_walker_gen_round_trips_through_validate(small_cfg, tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["walker-gen", "--config", str(small_cfg), "--out", str(out)]) == 0
    records = parse_tle((out / "walker.tle").read_text(), strict=True)
    assert len(records) == 120
    assert cli.main(["validate-tle", str(out / "walker.tle"), "--strict-tle"]) == 0
    assert "120 valid records" in capsys.readouterr().out


def test_snapshot_and_sweep_write_files(small_cfg, tmp_path):
    out = tmp_path / "out"
    assert cli.main(["snapshot", "--config", str(small_cfg), "--out", str(out)]) == 0
    assert (out / "snapshot.csv").read_text().startswith("src,dst,kind,")
    assert cli.main(["sweep", "--config", str(small_cfg), "--out", str(out)]) == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    # hbc and random, one alpha, one fraction, two seeds
    assert len(lines) == 1 + 4


def test_console_script_module_entry():
    proc = subprocess.run([sys.executable, "-m", "leocascade.cli", "show-config"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "alpha_grid = " in proc.stdout
