import os
from pathlib import Path

import numpy as np
import pytest

from morphnmpc import cli

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "scenarios"

FAST = """
[robot]
m_b = 4.8
m_l = 0.3
[nmpc]
horizon = 5
dt = 0.1
[scenario]
name = fast
duration = 1
[sim]
plant = rom
"""


@pytest.fixture
def fast_cfg(tmp_path):
    path = tmp_path / "fast.cfg"
    path.write_text(FAST)
    return str(path)


def test_selftest_passes(capsys):
    assert cli.main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out


def test_run_writes_outputs(fast_cfg, tmp_path, capsys):
    out = tmp_path / "out"
    rc = cli.main(["run", fast_cfg, "--out", str(out),
                   "--series", "z,cmd_thrust_1"])
    assert rc == 0
    assert (out / "log.csv").exists()
    assert (out / "metrics.txt").exists()
    data = np.loadtxt(out / "series_z.txt")
    assert data.shape == (11, 2)          # duration/dt + 1 rows
    assert np.allclose(data[:, 0], np.arange(11) * 0.1)
    assert (out / "series_cmd_thrust_1.txt").exists()


def test_run_override_changes_duration(fast_cfg, tmp_path):
    out = tmp_path / "out"
    rc = cli.main(["run", fast_cfg, "--out", str(out),
                   "--override", "scenario.duration=0.5"])
    assert rc == 0
    rows = (out / "log.csv").read_text().strip().splitlines()
    assert len(rows) == 1 + 6             # header + 0.5/0.1 + 1 samples


def test_run_missing_key_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(FAST.replace("m_b = 4.8\n", ""))
    assert cli.main(["run", str(bad)]) == 1
    assert "[robot].m_b" in capsys.readouterr().err


def test_series_unknown_channel_lists_options(fast_cfg, tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["run", fast_cfg, "--out", str(out)]) == 0
    rc = cli.main(["series", str(out / "log.csv"), "altitude"])
    assert rc == 1
    err = capsys.readouterr().err
    assert "altitude" in err and "wz" in err and "cmd_thrust_1" in err


def test_series_from_log(fast_cfg, tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", fast_cfg, "--out", str(out)]) == 0
    rc = cli.main(["series", str(out / "log.csv"), "roll", "--out",
                   str(tmp_path / "plots")])
    assert rc == 0
    data = np.loadtxt(tmp_path / "plots" / "series_roll.txt")
    assert data.shape == (11, 2)


def test_match_runs(capsys, tmp_path):
    rc = cli.main(["match", "--duration", "0.1", "--step", "0.01",
                   "--out", str(tmp_path)])
    assert rc == 0
    text = (tmp_path / "match.txt").read_text()
    assert text.startswith("x=")


def test_sweep_small_grid(tmp_path, capsys):
    path = tmp_path / "sw.cfg"
    path.write_text(FAST.replace("duration = 1",
                                 "duration = 1\nfaults = 0.3 1e9 4 0.5"))
    out = tmp_path / "sweep"
    rc = cli.main(["sweep", str(path), "--fault-time", "0.2:0.4:0.2",
                   "--out", str(out)])
    assert rc == 0
    table = (out / "sweep.txt").read_text().strip().splitlines()
    assert len(table) == 3                # header + two fault times
    assert (out / "fault_0.2" / "log.csv").exists()
    assert (out / "fault_0.4" / "metrics.txt").exists()


def test_sweep_requires_fault(fast_cfg, tmp_path, capsys):
    rc = cli.main(["sweep", fast_cfg, "--fault-time", "1:2:1",
                   "--out", str(tmp_path / "x")])
    assert rc == 1


def test_bad_grid_spec(fast_cfg, capsys):
    path = str(SCENARIO_DIR / "hover_failure.cfg")
    assert cli.main(["sweep", path, "--fault-time", "nope"]) == 1


def test_default_out_dir_env(monkeypatch):
    monkeypatch.setenv("MORPHNMPC_OUT", "/tmp/elsewhere")
    assert cli.default_out_dir() == "/tmp/elsewhere"
    monkeypatch.delenv("MORPHNMPC_OUT")
    assert cli.default_out_dir() == "morphnmpc_out"
