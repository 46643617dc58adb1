from pathlib import Path

import numpy as np
import pytest

from morphnmpc import config, harness, nmpc
from morphnmpc.errors import ConfigError

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "scenarios"

MINIMAL = """
[robot]
m_b = 4.8
m_l = 0.3
[nmpc]
horizon = 5
dt = 0.1
[scenario]
name = demo
duration = 2
[sim]
plant = rom
"""


@pytest.mark.parametrize("name", ["hover_failure.cfg", "cruise_failure.cfg",
                                  "waypoint_loe.cfg"])
def test_checked_in_scenarios_build(name):
    cfg = config.load(SCENARIO_DIR / name)
    params, nmpc_cfg, scenario = cfg.build()
    assert params.m_net == 6.0
    assert isinstance(nmpc_cfg, nmpc.NmpcConfig)
    assert isinstance(scenario, harness.Scenario)
    assert scenario.duration > 0


def test_minimal_defaults():
    params, nmpc_cfg, scenario = config.loads(MINIMAL).build()
    assert scenario.plant == "rom"
    assert scenario.reference.kind == "hover"
    assert len(scenario.schedule.events) == 0
    assert nmpc_cfg.horizon == 5


def test_missing_required_key_named():
    bad = MINIMAL.replace("m_b = 4.8\n", "")
    with pytest.raises(ConfigError, match=r"\[robot\].m_b"):
        config.loads(bad)


def test_unknown_key_named():
    bad = MINIMAL.replace("m_b = 4.8", "m_b = 4.8\nmass = 5")
    with pytest.raises(ConfigError, match=r"\[robot\].mass"):
        config.loads(bad)


def test_unknown_section_rejected():
    with pytest.raises(ConfigError, match="wheels"):
        config.loads(MINIMAL + "\n[wheels]\nradius = 0.1\n")


def test_bad_value_reports_location():
    bad = MINIMAL.replace("duration = 2", "duration = soon")
    with pytest.raises(ConfigError, match=r"\[scenario\].duration"):
        config.loads(bad)


def test_serialize_round_trip():
    for name in ("hover_failure.cfg", "cruise_failure.cfg", "waypoint_loe.cfg"):
        cfg = config.load(SCENARIO_DIR / name)
        assert config.loads(cfg.serialize()) == cfg


def test_overrides_compose_left_to_right():
    base = config.loads(MINIMAL)
    out = config.apply_overrides(base, ["nmpc.horizon=7", "nmpc.horizon=9"])
    assert out.get("nmpc", "horizon") == 9
    # base is untouched
    assert base.get("nmpc", "horizon") == 5


def test_override_idempotent():
    base = config.loads(MINIMAL)
    once = config.apply_overrides(base, ["nmpc.horizon=5"])
    assert once == base


def test_override_validation():
    base = config.loads(MINIMAL)
    with pytest.raises(ConfigError):
        config.apply_overrides(base, ["nmpc.horizon"])
    with pytest.raises(ConfigError, match=r"\[nmpc\].warp"):
        config.apply_overrides(base, ["nmpc.warp=1"])
    with pytest.raises(ConfigError):
        config.apply_overrides(base, ["nmpc.horizon=2.5"])


def test_fault_list_parsing():
    cfg = config.apply_overrides(
        config.loads(MINIMAL), ["scenario.faults=7 14 4 0.33; 14 21 4 0.66"])
    _, _, scenario = cfg.build()
    evs = scenario.schedule.events
    assert len(evs) == 2
    assert evs[0].rotor == 4 and evs[0].loe == 0.33
    assert evs[1].t_start == 14.0


def test_build_applies_robot_overrides():
    cfg = config.apply_overrides(config.loads(MINIMAL),
                                 ["robot.ixx=0.1", "robot.c_m=0.03",
                                  "robot.drag_ang=0.1 0.1 0.2"])
    params, _, _ = cfg.build()
    assert params.I_b[0, 0] == 0.1
    assert params.I_b[1, 1] == 0.13   # untouched defaults survive
    assert params.c_m == 0.03
    assert np.allclose(params.drag_ang, [0.1, 0.1, 0.2])
