import numpy as np
import pytest

from morphnmpc import nmpc, rom
from morphnmpc.params import HfParams


@pytest.fixture(scope="module")
def params():
    return HfParams()


@pytest.fixture(scope="module")
def cfg():
    return nmpc.NmpcConfig()


def _random_instance(rng, cfg, params):
    x0 = rom.hover_state(params)
    x0 += rng.normal(0.0, 0.05, rom.NX)
    u = np.tile(rom.hover_input(params), (cfg.horizon, 1))
    u += rng.normal(0.0, 0.3, u.shape)
    ref = np.tile(rom.hover_state(params), (cfg.horizon, 1))
    return x0, u, ref


def test_stage_cost_oracle(cfg):
    # single-stage hand computation: err=[1,0,...], q[0]=10 -> 10; plus effort
    x = np.zeros(rom.NX)
    x[0] = 1.0
    ref = np.zeros(rom.NX)
    u = np.zeros(rom.NU)
    u[0] = 2.0
    expected = 10.0 * 1.0 + 1e-3 * 4.0
    assert np.isclose(nmpc.stage_cost(x, u, ref, cfg), expected)


def test_stage_cost_yaw_error_wraps(cfg):
    x = np.zeros(rom.NX)
    x[5] = np.pi + 0.1
    ref = np.zeros(rom.NX)
    ref[5] = -np.pi + 0.1
    # same physical heading -> zero yaw error (weight is zero anyway; check
    # the wrap on roll, which does carry weight)
    x2 = np.zeros(rom.NX)
    x2[3] = 0.2
    ref2 = np.zeros(rom.NX)
    ref2[3] = 0.2 - 2.0 * np.pi
    assert nmpc.stage_cost(x2, np.zeros(rom.NU), ref2, cfg) < 1e-12


def test_gradient_matches_finite_differences(cfg, params):
    rng = np.random.default_rng(7)
    for _ in range(20):
        x0, u, ref = _random_instance(rng, cfg, params)
        g = nmpc.cost_gradient(x0, u, ref, cfg, params)
        # central differences on a handful of random coordinates
        idx = rng.integers(0, u.size, size=6)
        eps = 1e-6
        for flat in idx:
            j, k = divmod(int(flat), rom.NU)
            up, um = u.copy(), u.copy()
            up[j, k] += eps
            um[j, k] -= eps
            fp = nmpc.total_cost(nmpc.rollout(x0, up, cfg, params), up, ref, cfg)
            fm = nmpc.total_cost(nmpc.rollout(x0, um, cfg, params), um, ref, cfg)
            fd = (fp - fm) / (2.0 * eps)
            denom = max(abs(fd), abs(g[j, k]), 1e-8)
            assert abs(g[j, k] - fd) / denom < 1e-4


def test_hover_solve_returns_hover_thrust(cfg, params):
    x0 = rom.hover_state(params, (0.0, 0.0, 2.0))
    ref = np.tile(x0, (cfg.horizon, 1))
    warm = np.tile(rom.hover_input(params), (cfg.horizon, 1)) + 0.5
    u, diag = nmpc.solve(x0, ref, warm, cfg, params)
    assert np.all(np.abs(u[0, :4] - 14.715) < 0.5)
    assert diag["converged"] or diag["grad_norm"] < 1e-3


def test_solution_respects_detected_bounds(cfg, params):
    x0 = rom.hover_state(params)
    ref = np.tile(x0, (cfg.horizon, 1))
    bounds = nmpc.update_detected_bounds(cfg.bounds, np.array([0.0, 0.0, 0.0, 1.0]))
    warm = np.tile(rom.hover_input(params), (cfg.horizon, 1))
    u, _ = nmpc.solve(x0, ref, warm, cfg, params, detected_bounds=bounds)
    assert np.all(u[:, 3] == 0.0)
    assert np.all(u >= bounds.lower() - 1e-15)
    assert np.all(u <= bounds.upper() + 1e-15)


def test_solve_is_deterministic(cfg, params):
    rng = np.random.default_rng(11)
    x0, warm, ref = _random_instance(rng, cfg, params)
    u1, d1 = nmpc.solve(x0, ref, warm, cfg, params)
    u2, d2 = nmpc.solve(x0, ref, warm, cfg, params)
    assert np.array_equal(u1, u2)
    assert d1 == d2


def test_update_detected_bounds():
    b = nmpc.InputBounds()
    nb = nmpc.update_detected_bounds(b, np.array([0.0, 0.0, 0.0, 0.33]))
    assert np.isclose(nb.thrust_max[3], 30.0 * 0.67)
    assert np.all(nb.thrust_max[:3] == 30.0)
    assert np.all(nb.joint_acc_max == b.joint_acc_max)
    with pytest.raises(ValueError):
        nmpc.update_detected_bounds(b, np.array([0.0, 0.0, 0.0, 1.5]))


def test_fingerprint_stable_and_sensitive():
    a = nmpc.NmpcConfig()
    b = nmpc.NmpcConfig()
    assert a.fingerprint() == b.fingerprint()
    c = nmpc.NmpcConfig(horizon=7)
    assert c.fingerprint() != a.fingerprint()
    q = nmpc.default_q_weights()
    q[0] += 1.0
    d = nmpc.NmpcConfig(q_weights=q)
    assert d.fingerprint() != a.fingerprint()


def test_shift_warm_start():
    u = np.arange(24.0).reshape(3, 8)
    s = nmpc.shift_warm_start(u)
    assert np.array_equal(s[0], u[1])
    assert np.array_equal(s[1], u[2])
    assert np.array_equal(s[2], u[2])


def test_controller_step_shapes(cfg, params):
    ctrl = nmpc.NmpcController(cfg, params)
    x0 = rom.hover_state(params)
    ref = np.tile(x0, (cfg.horizon, 1))
    u, diag = ctrl.step(x0, ref)
    assert u.shape == (rom.NU,)
    assert "cost" in diag and np.isfinite(diag["cost"])
    ctrl.set_fault_estimate(np.array([0.0, 0.0, 0.0, 1.0]))
    u2, _ = ctrl.step(x0, ref)
    assert u2[3] == 0.0


def test_penalty_active_outside_limits(cfg):
    x = np.zeros(rom.NX)
    x[3] = 100.0 * nmpc.DEG
    pen, grad = nmpc._penalty_and_grad(x, cfg)
    assert pen > 0.0
    assert grad[3] > 0.0
    x[3] = 80.0 * nmpc.DEG
    pen, _ = nmpc._penalty_and_grad(x, cfg)
    assert pen == 0.0
