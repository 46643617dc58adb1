"""High-fidelity Euler-Lagrange plant: body plus distributed leg masses.

Generalized coordinates q = (p_b 3, theta_b 3, q_a 4); state is (q, qdot).
Each leg carries point masses along the hip-to-tip segment.  The mass
matrix is assembled from point-mass Jacobians plus the body blocks; the
Coriolis terms come from Christoffel symbols of M obtained by central
finite differences.  Joints are acceleration-controlled: commanded joint
accelerations are realized exactly and the implied torques can be recovered
by inverse dynamics.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels, attitude, rom
from .errors import SingularConfigurationError

NQ = 10
FD_STEP = 1e-6       # Christoffel finite-difference step
COND_LIMIT = 1e12    # body-block conditioning guard


@dataclass
class HfState:
    """Generalized coordinates and velocities of the plant."""

    q: np.ndarray = field(default_factory=lambda: np.zeros(NQ))
    qd: np.ndarray = field(default_factory=lambda: np.zeros(NQ))

    def flatten(self):
        return np.concatenate([self.q, self.qd])

    @classmethod
    def from_vector(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(x[:NQ].copy(), x[NQ:].copy())


def hf_from_rom(x_rom):
    """Convert a ROM state vector to an HF state vector (lossless)."""
    x_rom = np.asarray(x_rom, dtype=float)
    theta = x_rom[rom.TH]
    thetadot = attitude.euler_rate_matrix(theta) @ x_rom[rom.W]
    q = np.concatenate([x_rom[rom.P], theta, x_rom[rom.QA]])
    qd = np.concatenate([x_rom[rom.V], thetadot, x_rom[rom.QDA]])
    return np.concatenate([q, qd])


def rom_from_hf(x_hf):
    """Convert an HF state vector to a ROM state vector (lossless)."""
    x_hf = np.asarray(x_hf, dtype=float)
    q, qd = x_hf[:NQ], x_hf[NQ:]
    omega = attitude.omega_matrix(q[3:6]) @ qd[3:6]
    return np.concatenate([q[0:3], q[3:6], q[6:10], qd[0:3], omega, qd[6:10]])


def _pk(params):
    return _kernels.get_pack(params, hf=True)


def point_masses(params):
    """Mass of each leg point, leg-major order (12-vector for defaults)."""
    return np.tile(params.leg_point_masses, 4)


def point_kinematics(q, params):
    """World positions and Jacobians of all leg mass points.

    Returns (positions (n,3), jacobians (n,3,10), E) where E maps thetadot
    to body angular velocity (the rotational Jacobian of the theta block).
    """
    q = np.asarray(q, dtype=float)
    pk = _pk(params)
    x, J = _kernels.hf_point_jacobians(q, pk[3], pk[4], pk[5], pk[14],
                                       pk[12], pk[13])
    return x, J, attitude.omega_matrix(q[3:6])


def mass_matrix(q, params, check=True):
    """Generalized mass matrix M(q), 10x10.

    Raises SingularConfigurationError when the 6x6 body block conditioning
    exceeds 1e12 (near gimbal lock).  The joint block is legitimately zero
    for massless legs, so conditioning is judged on the body block only.
    """
    q = np.asarray(q, dtype=float)
    pk = _pk(params)
    M = _kernels.hf_mass(q, pk[0], pk[2], pk[3], pk[4], pk[5], pk[14],
                         pk[15], pk[12], pk[13])
    if check:
        _check_conditioning(M)
    return M


def _check_conditioning(M):
    w = np.linalg.eigvalsh(M[0:6, 0:6])
    if w[0] <= 0 or w[-1] / w[0] > COND_LIMIT:
        raise SingularConfigurationError(
            f"body mass block conditioning {w[-1] / max(w[0], 1e-300):.3e} "
            f"exceeds {COND_LIMIT:.0e}")


def mass_matrix_derivs(q, params):
    """dM/dq_k by central differences, shape (10, 10, 10); zero for p_b."""
    q = np.asarray(q, dtype=float)
    pk = _pk(params)
    return _kernels.hf_mass_derivs(q, pk[0], pk[2], pk[3], pk[4], pk[5],
                                   pk[14], pk[15], pk[12], pk[13], FD_STEP)


def coriolis_matrix(q, qd, params, dM=None):
    """C(q, qd) from Christoffel symbols of the mass matrix."""
    if dM is None:
        dM = mass_matrix_derivs(q, params)
    qd = np.asarray(qd, dtype=float)
    t1 = np.einsum('kij,k->ij', dM, qd)
    t2 = np.einsum('jik,k->ij', dM, qd)
    t3 = np.einsum('ijk,k->ij', dM, qd)
    return 0.5 * (t1 + t2 - t3)


def gravity_vector(q, params):
    """dV/dq for V = sum_i m_i g z_i + m_b g z_b."""
    _, J, _ = point_kinematics(q, params)
    g_vec = params.g * np.einsum('n,nj->j', point_masses(params), J[:, 2, :])
    g_vec[2] += params.m_b * params.g
    return g_vec


def bias_and_gravity(q, qd, params):
    """C(q, qd) qd + g(q)."""
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    pk = _pk(params)
    return _kernels.hf_bias(q, qd, pk[0], pk[2], pk[3], pk[4], pk[5],
                            pk[14], pk[15], pk[12], pk[13], pk[11], FD_STEP)


def input_matrix(q, params):
    """B(q), 10x8: thrust columns via tip Jacobians, unit joint-torque columns."""
    q = np.asarray(q, dtype=float)
    pk = _pk(params)
    theta, q_a = q[3:6], q[6:10]
    tips, Jt = _kernels.hf_point_jacobians(q, pk[3], pk[4], pk[5],
                                           np.ones(1), pk[12], pk[13])
    R = attitude.rotation_matrix(theta)
    E = attitude.omega_matrix(theta)
    _, dirs = rom.thruster_geometry(q_a, params)
    B = np.zeros((NQ, rom.NU))
    cm = params.spin_dirs * params.c_m
    for k in range(4):
        B[:, k] = Jt[k].T @ (R @ dirs[k])
        B[3:6, k] += E.T @ (cm[k] * dirs[k])
    B[6:10, 4:8] = np.eye(4)
    return B


def drag_generalized(q, qd, params):
    """Generalized force of body viscous drag."""
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    return _kernels.hf_drag_force(q, qd, params.drag_lin, params.drag_ang)


def _assemble(x, u, params, with_drag):
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    pk = _pk(params)
    return _kernels.hf_assemble(x, u, pk[0], pk[2], pk[3], pk[4], pk[5],
                                pk[6], pk[7], pk[8], pk[9], pk[10], pk[11],
                                pk[14], pk[15], pk[12], pk[13], with_drag,
                                FD_STEP)


def hf_dynamics(x, u, params, with_drag=True):
    """Plant state derivative, 20-vector.

    Joint accelerations are prescribed (perfect low-level joint control);
    the unactuated body block is solved from the Euler-Lagrange equations.
    """
    M, rhs = _assemble(x, u, params, with_drag)
    _check_conditioning(M)
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    qdd = np.empty(NQ)
    qdd[6:10] = u[4:8]
    qdd[0:6] = np.linalg.solve(M[0:6, 0:6],
                               rhs[0:6] - M[0:6, 6:10] @ qdd[6:10])
    return np.concatenate([x[NQ:], qdd])


def joint_torques(x, u, params, with_drag=True):
    """Torques the joint servos must supply to realize the commanded
    accelerations (inverse dynamics on the joint rows)."""
    M, rhs = _assemble(x, u, params, with_drag)
    _check_conditioning(M)
    u = np.asarray(u, dtype=float)
    qdd = np.empty(NQ)
    qdd[6:10] = u[4:8]
    qdd[0:6] = np.linalg.solve(M[0:6, 0:6],
                               rhs[0:6] - M[0:6, 6:10] @ qdd[6:10])
    # rhs already holds Q - bias, with a unit-torque joint input mapping
    return M[6:10, :] @ qdd - rhs[6:10]


def total_energy(x, params):
    """Kinetic plus gravitational potential energy (zero level at z = 0)."""
    x = np.asarray(x, dtype=float)
    q, qd = x[:NQ], x[NQ:]
    M = mass_matrix(q, params, check=False)
    xs, _, _ = point_kinematics(q, params)
    V = params.g * (point_masses(params) @ xs[:, 2] + params.m_b * q[2])
    return 0.5 * qd @ M @ qd + V
