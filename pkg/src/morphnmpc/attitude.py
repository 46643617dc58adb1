"""Z-Y-X (yaw-pitch-roll) Euler angle kinematics.

Angles are stored as ``theta = (roll, pitch, yaw)`` and the body-to-world
rotation is ``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``.
"""

import numpy as np

from .errors import GimbalLockError

GIMBAL_EPS = 1e-3  # [rad] margin from the pitch = +/-90 deg singularity


def rotation_matrix(theta):
    """Body-to-world rotation for Z-Y-X Euler angles (roll, pitch, yaw)."""
    cr, sr = np.cos(theta[0]), np.sin(theta[0])
    cp, sp = np.cos(theta[1]), np.sin(theta[1])
    cy, sy = np.cos(theta[2]), np.sin(theta[2])
    return np.array([
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ])


def rotation_matrix_derivs(theta):
    """d(rotation_matrix)/d(roll, pitch, yaw), shape (3, 3, 3)."""
    cr, sr = np.cos(theta[0]), np.sin(theta[0])
    cp, sp = np.cos(theta[1]), np.sin(theta[1])
    cy, sy = np.cos(theta[2]), np.sin(theta[2])
    Rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1.0]])
    Ry = np.array([[cp, 0, sp], [0, 1.0, 0], [-sp, 0, cp]])
    Rx = np.array([[1.0, 0, 0], [0, cr, -sr], [0, sr, cr]])
    dRz = np.array([[-sy, -cy, 0], [cy, -sy, 0], [0, 0, 0.0]])
    dRy = np.array([[-sp, 0, cp], [0, 0, 0], [-cp, 0, -sp]])
    dRx = np.array([[0, 0, 0], [0, -sr, -cr], [0, cr, -sr]])
    out = np.empty((3, 3, 3))
    out[0] = Rz @ Ry @ dRx
    out[1] = Rz @ dRy @ Rx
    out[2] = dRz @ Ry @ Rx
    return out


def check_pitch(theta):
    if abs(theta[1]) >= np.pi / 2.0 - GIMBAL_EPS:
        raise GimbalLockError(
            f"pitch {theta[1]:.4f} rad within {GIMBAL_EPS} of the Z-Y-X singularity")


def euler_rate_matrix(theta):
    """Matrix J with thetadot = J(theta) @ omega_body.

    Raises GimbalLockError when |pitch| >= pi/2 - GIMBAL_EPS.
    """
    check_pitch(theta)
    cr, sr = np.cos(theta[0]), np.sin(theta[0])
    cp, tp = np.cos(theta[1]), np.tan(theta[1])
    return np.array([
        [1.0, sr * tp, cr * tp],
        [0.0, cr, -sr],
        [0.0, sr / cp, cr / cp],
    ])


def euler_rate_matrix_derivs(theta):
    """d(euler_rate_matrix)/d(roll, pitch, yaw), shape (3, 3, 3)."""
    check_pitch(theta)
    cr, sr = np.cos(theta[0]), np.sin(theta[0])
    cp, tp = np.cos(theta[1]), np.tan(theta[1])
    out = np.zeros((3, 3, 3))
    out[0] = np.array([
        [0.0, cr * tp, -sr * tp],
        [0.0, -sr, -cr],
        [0.0, cr / cp, -sr / cp],
    ])
    sec2 = 1.0 / cp ** 2
    out[1] = np.array([
        [0.0, sr * sec2, cr * sec2],
        [0.0, 0.0, 0.0],
        [0.0, sr * tp / cp, cr * tp / cp],
    ])
    return out


def omega_matrix(theta):
    """Inverse of euler_rate_matrix: omega_body = E(theta) @ thetadot."""
    cr, sr = np.cos(theta[0]), np.sin(theta[0])
    cp, sp = np.cos(theta[1]), np.sin(theta[1])
    return np.array([
        [1.0, 0.0, -sp],
        [0.0, cr, sr * cp],
        [0.0, -sr, cr * cp],
    ])


def wrap_angle(a):
    """Wrap to the principal branch (-pi, pi]."""
    return np.pi - np.mod(np.pi - a, 2.0 * np.pi)
