import numpy as np
import pytest

from morphnmpc import faults


def test_event_validation():
    with pytest.raises(ValueError):
        faults.FaultEvent(0.0, 1.0, rotor=0, loe=0.5)
    with pytest.raises(ValueError):
        faults.FaultEvent(0.0, 1.0, rotor=5, loe=0.5)
    with pytest.raises(ValueError):
        faults.FaultEvent(0.0, 1.0, rotor=1, loe=1.5)
    with pytest.raises(ValueError):
        faults.FaultEvent(2.0, 1.0, rotor=1, loe=0.5)


def test_empty_schedule_zero_everywhere():
    s = faults.FaultSchedule()
    for t in (-1.0, 0.0, 5.0, 1e6):
        assert np.all(s.loe_vector(t) == 0.0)


def test_half_open_boundaries():
    s = faults.FaultSchedule([(2.0, 3.0, 1, 0.5)])
    assert s.loe_at(1, 2.0) == 0.5     # start included
    assert s.loe_at(1, 3.0) == 0.0     # end excluded
    assert s.loe_at(1, 2.999) == 0.5
    assert s.loe_at(1, 1.999) == 0.0


def test_overlap_rejected():
    with pytest.raises(ValueError):
        faults.FaultSchedule([(0.0, 2.0, 4, 0.3), (1.0, 3.0, 4, 0.6)])
    # different rotors may overlap
    faults.FaultSchedule([(0.0, 2.0, 3, 0.3), (1.0, 3.0, 4, 0.6)])


def test_staged_schedule_lookup():
    s = faults.FaultSchedule([(7.0, 14.0, 4, 0.33), (14.0, 21.0, 4, 0.66),
                              (21.0, 1e9, 4, 1.0)])
    assert s.loe_at(4, 15.0) == 0.66
    assert s.loe_at(4, 7.0) == 0.33
    assert s.loe_at(4, 25.0) == 1.0
    assert s.loe_at(3, 15.0) == 0.0


def test_effective_thrust_ceiling_example():
    # 66% loss of a 30 N ceiling leaves a 10.2 N cap
    s = faults.FaultSchedule([(0.0, 10.0, 4, 0.66)])
    eff = faults.effective_thrust(np.array([25.0, 25.0, 25.0, 25.0]), 5.0, s, 30.0)
    assert np.isclose(eff[3], 10.2)
    assert np.all(eff[:3] == 25.0)


def test_effective_thrust_33_percent():
    s = faults.FaultSchedule([(0.0, 10.0, 4, 0.33)])
    eff = faults.effective_thrust(np.full(4, 25.0), 5.0, s, 30.0)
    assert np.isclose(eff[3], 30.0 * 0.67)
    # a command below the shrunken cap passes through unchanged
    eff = faults.effective_thrust(np.full(4, 15.0), 5.0, s, 30.0)
    assert np.all(eff == 15.0)


def test_effective_never_exceeds_commanded():
    rng = np.random.default_rng(31)
    s = faults.FaultSchedule([(0.0, 10.0, 2, 0.4), (3.0, 8.0, 4, 0.9)])
    for _ in range(100):
        cmd = rng.uniform(0, 30, 4)
        t = rng.uniform(-1, 12)
        eff = faults.effective_thrust(cmd, t, s, 30.0)
        assert np.all(eff <= cmd + 1e-15)


def test_loe_monotonicity():
    # a larger loss fraction never produces more thrust
    rng = np.random.default_rng(32)
    for _ in range(50):
        a, b = np.sort(rng.uniform(0, 1, 2))
        cmd = rng.uniform(0, 30, 4)
        sa = faults.FaultSchedule([(0.0, 1.0, 1, a)])
        sb = faults.FaultSchedule([(0.0, 1.0, 1, b)])
        ea = faults.effective_thrust(cmd, 0.5, sa, 30.0)
        eb = faults.effective_thrust(cmd, 0.5, sb, 30.0)
        assert eb[0] <= ea[0] + 1e-15


def test_hover_mode_normalization():
    s = faults.FaultSchedule([(0.0, 10.0, 4, 0.5)])
    eff = faults.effective_thrust(np.full(4, 25.0), 5.0, s, 30.0,
                                  mode="hover", hover_thrust=14.715)
    assert np.isclose(eff[3], 14.715 * 0.5)
    assert np.all(eff[:3] == 25.0)
    with pytest.raises(ValueError):
        faults.effective_thrust(np.full(4, 25.0), 5.0, s, 30.0, mode="hover")


def test_negative_command_rejected():
    s = faults.FaultSchedule()
    with pytest.raises(ValueError):
        faults.effective_thrust(np.array([-1.0, 0, 0, 0]), 0.0, s, 30.0)
