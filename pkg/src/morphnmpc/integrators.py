"""Fixed-step explicit RK4 integration with zero-order-hold inputs."""

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteError


@dataclass
class StepSpec:
    """Control-period step size and plant substeps per period."""

    h: float = 0.1
    substeps: int = 10

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("step size must be positive")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")


def rk4_step(f, x, u, h):
    """One classical RK4 step of xdot = f(x, u) with u held constant."""
    k1 = f(x, u)
    k2 = f(x + 0.5 * h * k1, u)
    k3 = f(x + 0.5 * h * k2, u)
    k4 = f(x + h * k3, u)
    x_next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x_next)):
        raise NonFiniteError("RK4 stage produced non-finite values")
    return x_next


def integrate_held(f, x0, u, h, n):
    """n RK4 steps with constant input; returns the n+1 visited states."""
    traj = np.empty((n + 1,) + np.shape(x0))
    traj[0] = x0
    x = np.asarray(x0, dtype=float)
    for i in range(n):
        x = rk4_step(f, x, u, h)
        traj[i + 1] = x
    return traj
