"""Reduced-order prediction model.

One rigid body plus four lumped leg masses.  Posture (hip sagittal angles)
relocates and tilts the thrusters, which is the entire control coupling:
the rotational dynamics use a constant effective inertia.

State layout (20-vector): p(0:3), theta(3:6), q_a(6:10), v(10:13),
omega(13:16), qd_a(16:20).  Input layout (8-vector): thrusts(0:4),
joint accelerations(4:8).
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels, attitude
from .params import LEG_SIGN_X, RobotParams

NX = 20
NU = 8

# state slice indices
P = slice(0, 3)
TH = slice(3, 6)
QA = slice(6, 10)
V = slice(10, 13)
W = slice(13, 16)
QDA = slice(16, 20)


@dataclass
class RomState:
    """Structured view of the 20-dimensional ROM state."""

    p_b: np.ndarray = field(default_factory=lambda: np.zeros(3))
    theta_b: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q_a: np.ndarray = field(default_factory=lambda: np.zeros(4))
    v_b: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega_b: np.ndarray = field(default_factory=lambda: np.zeros(3))
    qd_a: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def flatten(self):
        return np.concatenate([self.p_b, self.theta_b, self.q_a,
                               self.v_b, self.omega_b, self.qd_a])

    @classmethod
    def from_vector(cls, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (NX,):
            raise ValueError(f"ROM state must have {NX} entries, got {x.shape}")
        return cls(x[P].copy(), x[TH].copy(), x[QA].copy(),
                   x[V].copy(), x[W].copy(), x[QDA].copy())


@dataclass
class ControlInput:
    """Per-rotor thrusts [N] and sagittal joint accelerations [rad/s^2]."""

    thrusts: np.ndarray = field(default_factory=lambda: np.zeros(4))
    joint_acc: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def __post_init__(self):
        self.thrusts = np.asarray(self.thrusts, dtype=float)
        self.joint_acc = np.asarray(self.joint_acc, dtype=float)
        if np.any(self.thrusts < 0):
            raise ValueError("thrusts must be nonnegative")

    def flatten(self):
        return np.concatenate([self.thrusts, self.joint_acc])

    @classmethod
    def from_vector(cls, u):
        u = np.asarray(u, dtype=float)
        return cls(u[:4].copy(), u[4:8].copy())


@dataclass
class Wrench:
    """Force in the world frame, torque in the body frame."""

    force: np.ndarray
    torque: np.ndarray


def hover_state(params, p=(0.0, 0.0, 0.0)):
    """ROM state at rest in the nominal flight posture."""
    x = np.zeros(NX)
    x[P] = p
    x[QA] = params.q_nominal
    return x


def hover_input(params):
    return np.concatenate([np.full(4, params.hover_thrust), np.zeros(4)])


def thruster_geometry(q_a, params):
    """Rotor positions and unit thrust directions in the body frame.

    Returns (positions 4x3, directions 4x3).  Directions tilt with the leg
    in the sagittal (x-z) plane and equal body +z at the nominal posture.
    """
    q_a = np.asarray(q_a, dtype=float)
    pos = params.hip_offsets + params.leg_tip_offsets(q_a)
    dq = q_a - params.q_nominal
    dirs = np.column_stack([
        -LEG_SIGN_X * np.sin(dq),
        np.zeros(4),
        np.cos(dq),
    ])
    return pos, dirs


def thruster_geometry_derivs(q_a, params):
    """d(position)/dq_k and d(direction)/dq_k for each leg, both 4x3."""
    q_a = np.asarray(q_a, dtype=float)
    dpos = np.column_stack([
        LEG_SIGN_X * params.L_leg * np.cos(q_a),
        np.zeros(4),
        params.L_leg * np.sin(q_a),
    ])
    dq = q_a - params.q_nominal
    ddirs = np.column_stack([
        -LEG_SIGN_X * np.cos(dq),
        np.zeros(4),
        -np.sin(dq),
    ])
    return dpos, ddirs


def net_wrench(q_a, thrusts, params):
    """Total thruster wrench: force and torque in the body frame.

    Torque includes the moment of each thrust about the body origin plus the
    propeller reaction moment c_m * T along the thrust axis, signed by the
    rotor spin direction.
    """
    thrusts = np.asarray(thrusts, dtype=float)
    pos, dirs = thruster_geometry(q_a, params)
    f_each = dirs * thrusts[:, None]
    force = f_each.sum(axis=0)
    torque = np.cross(pos, f_each).sum(axis=0)
    torque += (params.spin_dirs * params.c_m * thrusts) @ dirs
    return Wrench(force=force, torque=torque)


def drag_wrench(v_b, omega_b, params):
    """Viscous drag: force opposes world velocity, torque opposes body rate."""
    return Wrench(force=-params.drag_lin * np.asarray(v_b, dtype=float),
                  torque=-params.drag_ang * np.asarray(omega_b, dtype=float))


def rom_dynamics(x, u, params):
    """ROM state derivative, 20-vector.

    Raises GimbalLockError near pitch = +/-90 deg.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    attitude.check_pitch(x[TH])
    pk = _kernels.get_pack(params)
    return _kernels.rom_rhs(x, u, params.m_net, pk[16], pk[17], pk[11],
                            pk[3], pk[4], pk[5], pk[6], pk[7], pk[8],
                            pk[9], pk[10], pk[12], pk[13])


def rom_jacobians(x, u, params):
    """Analytic Jacobians (A = df/dx 20x20, B = df/du 20x8) of rom_dynamics."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    attitude.check_pitch(x[TH])
    pk = _kernels.get_pack(params)
    return _kernels.rom_jac(x, u, params.m_net, pk[16], pk[17], pk[11],
                            pk[3], pk[4], pk[5], pk[6], pk[7], pk[8],
                            pk[9], pk[10], pk[12], pk[13])
