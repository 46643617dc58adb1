import numpy as np
import pytest

from morphnmpc import hf, rom
from morphnmpc.params import HfParams


@pytest.fixture(scope="module")
def params():
    return HfParams()


def random_q(rng):
    q = np.zeros(hf.NQ)
    q[0:3] = rng.uniform(-1, 1, 3)
    q[3:6] = rng.uniform(-0.9, 0.9, 3)
    q[6:10] = rng.uniform(0.05, 1.5, 4)
    return q


def test_hover_is_fixed_point(params):
    x = hf.hf_from_rom(rom.hover_state(params, (0.0, 0.0, 2.0)))
    dx = hf.hf_dynamics(x, rom.hover_input(params), params)
    assert np.max(np.abs(dx)) < 1e-12


def test_conversion_round_trip(params):
    rng = np.random.default_rng(1)
    x_rom = np.concatenate([rng.uniform(-1, 1, 3), rng.uniform(-0.8, 0.8, 3),
                            rng.uniform(0.1, 1.4, 4), rng.uniform(-2, 2, 10)])
    assert np.allclose(hf.rom_from_hf(hf.hf_from_rom(x_rom)), x_rom)


def test_mass_matrix_symmetric_positive_definite(params):
    rng = np.random.default_rng(2)
    for _ in range(100):
        M = hf.mass_matrix(random_q(rng), params)
        assert np.allclose(M, M.T, atol=1e-12)
        assert np.min(np.linalg.eigvalsh(M)) > 0.0


def test_skew_symmetry_of_coriolis(params):
    # dM/dt - 2C is skew-symmetric along any motion (energy bookkeeping)
    rng = np.random.default_rng(3)
    for _ in range(10):
        q = random_q(rng)
        qd = rng.uniform(-2, 2, hf.NQ)
        dM = hf.mass_matrix_derivs(q, params)
        Mdot = np.einsum("k,kij->ij", qd, dM)
        C = hf.coriolis_matrix(q, qd, params)
        S = Mdot - 2.0 * C
        assert np.max(np.abs(S + S.T)) < 1e-6


def test_kinetic_energy_consistency(params):
    # the qd^T M qd form must agree with total minus potential energy
    rng = np.random.default_rng(4)
    q = random_q(rng)
    qd = rng.uniform(-2, 2, hf.NQ)
    M = hf.mass_matrix(q, params)
    ke_quad = 0.5 * qd @ M @ qd
    e_total = hf.total_energy(np.concatenate([q, qd]), params)
    e_rest = hf.total_energy(np.concatenate([q, np.zeros(hf.NQ)]), params)
    assert np.isclose(ke_quad, e_total - e_rest, rtol=1e-12)


def test_energy_conserved_without_drag_or_input(params):
    p = params.copy(drag_lin=np.zeros(3), drag_ang=np.zeros(3))
    x = hf.hf_from_rom(rom.hover_state(p, (0.0, 0.0, 5.0)))
    x[10:13] = [0.5, -0.2, 0.4]
    x[13:16] = [0.6, 0.3, -0.5]
    u = np.zeros(rom.NU)
    e0 = hf.total_energy(x, p)
    h = 1e-3
    for _ in range(200):
        k1 = hf.hf_dynamics(x, u, p)
        k2 = hf.hf_dynamics(x + 0.5 * h * k1, u, p)
        k3 = hf.hf_dynamics(x + 0.5 * h * k2, u, p)
        k4 = hf.hf_dynamics(x + h * k3, u, p)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    e1 = hf.total_energy(x, p)
    assert abs(e1 - e0) / abs(e0) < 1e-8


def test_degenerate_limit_matches_rom(params):
    # with massless legs and frozen joints both models share the dynamics
    p = HfParams(m_b=6.0, m_l=0.0)
    rng = np.random.default_rng(6)
    x_rom = rom.hover_state(p, (0.0, 0.0, 2.0))
    x_rom[rom.TH] = rng.uniform(-0.3, 0.3, 3)
    x_rom[rom.V] = rng.uniform(-1, 1, 3)
    x_rom[rom.W] = rng.uniform(-1, 1, 3)
    u = np.concatenate([rng.uniform(5, 20, 4), np.zeros(4)])
    dx_rom = rom.rom_dynamics(x_rom, u, p)
    dx_hf = hf.hf_dynamics(hf.hf_from_rom(x_rom), u, p)
    dx_hf_rom = np.empty(rom.NX)
    # assemble the HF derivative in ROM ordering for comparison
    x_hf = hf.hf_from_rom(x_rom)
    eps = 1e-8
    approx = (hf.rom_from_hf(x_hf + eps * dx_hf) - hf.rom_from_hf(x_hf)) / eps
    assert np.allclose(approx, dx_rom, atol=1e-5)


def test_joint_torques_consistent_with_dynamics(params):
    rng = np.random.default_rng(8)
    x = np.concatenate([random_q(rng), rng.uniform(-1, 1, hf.NQ)])
    u = np.concatenate([rng.uniform(5, 20, 4), rng.uniform(-3, 3, 4)])
    dx = hf.hf_dynamics(x, u, params)
    qdd = dx[hf.NQ:]
    assert np.allclose(qdd[6:10], u[4:8], atol=1e-12)
    tau = hf.joint_torques(x, u, params)
    assert tau.shape == (4,)
    assert np.all(np.isfinite(tau))


def test_thrust_virtual_work(params):
    # with c_m = 0 the generalized thrust force must equal the virtual work
    # of the applied forces: power = sum_k T_k (R d_k) . v_tip_k
    from morphnmpc.attitude import rotation_matrix

    p = params.copy(c_m=0.0)
    rng = np.random.default_rng(9)
    q = random_q(rng)
    qd = rng.uniform(-1, 1, hf.NQ)
    thrusts = rng.uniform(0, 20, 4)
    power = qd @ (hf.input_matrix(q, p)[:, :4] @ thrusts)

    def tips(qv):
        pos, _ = rom.thruster_geometry(qv[6:10], p)
        return qv[0:3] + pos @ rotation_matrix(qv[3:6]).T

    eps = 1e-7
    v_tips = (tips(q + eps * qd) - tips(q - eps * qd)) / (2 * eps)
    _, dirs = rom.thruster_geometry(q[6:10], p)
    R = rotation_matrix(q[3:6])
    power_direct = sum(thrusts[k] * (R @ dirs[k]) @ v_tips[k] for k in range(4))
    assert np.isclose(power, power_direct, rtol=1e-6)
