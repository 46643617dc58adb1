"""Receding-horizon fault-recovery controller.

Direct shooting over the ROM with a quadratic tracking cost, hard box
constraints on the inputs (enforced by projection) and smooth quadratic
penalties on attitude/joint state limits.  Solved by projected gradient
descent with Armijo backtracking; gradients are exact (reverse-mode chain
through the RK4 rollout using the analytic ROM Jacobians).

Yaw carries zero tracking weight: after a rotor failure the vehicle is free
to spin about its yaw axis, which is what makes the reduced attitude
stabilizable, so the same controller configuration covers healthy flight
and fault recovery.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import rom
from .errors import GimbalLockError, NonFiniteError

DEG = np.pi / 180.0


@dataclass
class InputBounds:
    """Box bounds on thrusts [N] and joint accelerations [rad/s^2]."""

    thrust_min: np.ndarray = field(default_factory=lambda: np.zeros(4))
    thrust_max: np.ndarray = field(default_factory=lambda: np.full(4, 30.0))
    joint_acc_min: np.ndarray = field(default_factory=lambda: np.full(4, -50.0))
    joint_acc_max: np.ndarray = field(default_factory=lambda: np.full(4, 50.0))

    def __post_init__(self):
        for name in ("thrust_min", "thrust_max", "joint_acc_min", "joint_acc_max"):
            setattr(self, name, np.broadcast_to(
                np.asarray(getattr(self, name), dtype=float), (4,)).copy())
        if np.any(self.lower() > self.upper()):
            raise ValueError("bounds must satisfy min <= max elementwise")

    def lower(self):
        return np.concatenate([self.thrust_min, self.joint_acc_min])

    def upper(self):
        return np.concatenate([self.thrust_max, self.joint_acc_max])


@dataclass
class StateBounds:
    """Soft state limits enforced by quadratic penalty."""

    roll_pitch_limit: float = 90.0 * DEG
    joint_min: float = 0.0
    joint_max: float = 90.0 * DEG
    side_sum_limit: float = 110.0 * DEG   # wheel-collision guard, per side
    # legs sharing a body side: (front-left, rear-left), (front-right, rear-right)
    sides: tuple = ((0, 2), (1, 3))

    def __post_init__(self):
        if self.joint_max <= self.joint_min:
            raise ValueError("joint range is empty")
        if self.roll_pitch_limit <= 0 or self.side_sum_limit <= 0:
            raise ValueError("limits must be positive")


def default_q_weights():
    """Diagonal state weights, stiffer on the vertical channel so altitude
    is defended during fault transients.

    Yaw angle and yaw rate carry zero weight: after a complete rotor loss
    the vehicle must be free to spin about its vertical axis, so heading is
    deliberately uncontrolled and the drag fixed point sets the spin rate.
    """
    q = np.empty(rom.NX)
    q[rom.P] = (10.0, 10.0, 15.0)
    q[rom.TH] = (50.0, 50.0, 0.0)
    q[rom.QA] = 0.5
    q[rom.V] = (1.0, 1.0, 8.0)
    q[rom.W] = (1.2, 1.2, 0.0)
    q[rom.QDA] = 0.1
    return q


def default_r_weights():
    return np.concatenate([np.full(4, 1e-3), np.full(4, 1e-2)])


@dataclass
class NmpcConfig:
    horizon: int = 5
    dt: float = 0.1
    q_weights: np.ndarray = field(default_factory=default_q_weights)
    r_weights: np.ndarray = field(default_factory=default_r_weights)
    bounds: InputBounds = field(default_factory=InputBounds)
    state_bounds: StateBounds = field(default_factory=StateBounds)
    max_iters: int = 200
    grad_tol: float = 1e-6
    penalty_weight: float = 1e3
    armijo_c: float = 1e-4
    detection_delay: float = 0.1   # oracle fault-detection latency [s]

    def __post_init__(self):
        self.q_weights = np.asarray(self.q_weights, dtype=float)
        self.r_weights = np.asarray(self.r_weights, dtype=float)
        if np.any(self.q_weights < 0) or np.any(self.r_weights < 0):
            raise ValueError("weights must be nonnegative")
        if np.any(self.r_weights[:4] <= 0):
            raise ValueError("thrust input weights must be positive")

    def fingerprint(self):
        """Hash of every field that shapes controller behavior."""
        payload = {
            "horizon": self.horizon, "dt": self.dt,
            "q": self.q_weights.tolist(), "r": self.r_weights.tolist(),
            "lo": self.bounds.lower().tolist(), "hi": self.bounds.upper().tolist(),
            "sb": [self.state_bounds.roll_pitch_limit, self.state_bounds.joint_min,
                   self.state_bounds.joint_max, self.state_bounds.side_sum_limit],
            "max_iters": self.max_iters, "grad_tol": self.grad_tol,
            "penalty": self.penalty_weight, "armijo": self.armijo_c,
            "delay": self.detection_delay,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def update_detected_bounds(current, fault_estimate):
    """Shrink per-rotor thrust ceilings by the estimated loss fractions."""
    loe = np.asarray(fault_estimate, dtype=float)
    if np.any(loe < 0) or np.any(loe > 1):
        raise ValueError("LoE fractions must lie in [0, 1]")
    new_max = current.thrust_max * (1.0 - loe)
    return InputBounds(thrust_min=np.minimum(current.thrust_min, new_max),
                       thrust_max=new_max,
                       joint_acc_min=current.joint_acc_min,
                       joint_acc_max=current.joint_acc_max)


def rollout(x0, u_seq, cfg, params):
    """ROM trajectory under the input sequence, shape (N+1, 20).

    One RK4 step of length dt per stage (the discrete prediction map).
    """
    u_seq = np.atleast_2d(np.asarray(u_seq, dtype=float))
    n = u_seq.shape[0]
    traj = np.empty((n + 1, rom.NX))
    traj[0] = x0
    x = np.asarray(x0, dtype=float)
    h = cfg.dt
    for j in range(n):
        u = u_seq[j]
        k1 = rom.rom_dynamics(x, u, params)
        k2 = rom.rom_dynamics(x + 0.5 * h * k1, u, params)
        k3 = rom.rom_dynamics(x + 0.5 * h * k2, u, params)
        k4 = rom.rom_dynamics(x + h * k3, u, params)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise NonFiniteError("rollout diverged")
        traj[j + 1] = x
    return traj


def _state_error(x, ref):
    err = x - ref
    # attitude errors on the principal branch
    err[3:6] = np.pi - np.mod(np.pi - err[3:6], 2.0 * np.pi)
    return err


def _penalty_and_grad(x, cfg):
    """Smooth quadratic penalty for state-bound violations, with gradient."""
    sb = cfg.state_bounds
    w = cfg.penalty_weight
    pen = 0.0
    grad = np.zeros(rom.NX)
    for i in (3, 4):  # roll, pitch
        v = abs(x[i]) - sb.roll_pitch_limit
        if v > 0.0:
            pen += w * v * v
            grad[i] += 2.0 * w * v * np.sign(x[i])
    for k in range(4):
        qk = x[6 + k]
        if qk > sb.joint_max:
            v = qk - sb.joint_max
            pen += w * v * v
            grad[6 + k] += 2.0 * w * v
        elif qk < sb.joint_min:
            v = sb.joint_min - qk
            pen += w * v * v
            grad[6 + k] -= 2.0 * w * v
    for side in sb.sides:
        s = sum(x[6 + k] for k in side) - sb.side_sum_limit
        if s > 0.0:
            pen += w * s * s
            for k in side:
                grad[6 + k] += 2.0 * w * s
    return pen, grad


def stage_cost(x, u, ref, cfg):
    """Tracking + effort + state-penalty cost of one stage."""
    err = _state_error(np.asarray(x, dtype=float), np.asarray(ref, dtype=float))
    pen, _ = _penalty_and_grad(x, cfg)
    return float(err @ (cfg.q_weights * err) + u @ (cfg.r_weights * u) + pen)


def total_cost(traj, u_seq, ref, cfg):
    """Sum of stage costs: predicted states x_1..x_N against their targets."""
    traj = np.asarray(traj, dtype=float)
    u_seq = np.atleast_2d(np.asarray(u_seq, dtype=float))
    n = u_seq.shape[0]
    return sum(stage_cost(traj[j + 1], u_seq[j], ref[j], cfg) for j in range(n))


def cost_gradient(x0, u_seq, ref, cfg, params):
    """Gradient of total_cost w.r.t. the stacked input sequence, shape (N, 8).

    Reverse-mode accumulation through the RK4 stage chain using the analytic
    ROM Jacobians.
    """
    u_seq = np.atleast_2d(np.asarray(u_seq, dtype=float))
    n = u_seq.shape[0]
    h = cfg.dt
    x = np.asarray(x0, dtype=float)
    xs = np.empty((n + 1, rom.NX))
    xs[0] = x
    phis_x = np.empty((n, rom.NX, rom.NX))
    phis_u = np.empty((n, rom.NX, rom.NU))
    eye = np.eye(rom.NX)
    for j in range(n):
        u = u_seq[j]
        k1 = rom.rom_dynamics(x, u, params)
        A1, B1 = rom.rom_jacobians(x, u, params)
        x2 = x + 0.5 * h * k1
        k2 = rom.rom_dynamics(x2, u, params)
        A2, B2 = rom.rom_jacobians(x2, u, params)
        x3 = x + 0.5 * h * k2
        k3 = rom.rom_dynamics(x3, u, params)
        A3, B3 = rom.rom_jacobians(x3, u, params)
        x4 = x + h * k3
        k4 = rom.rom_dynamics(x4, u, params)
        A4, B4 = rom.rom_jacobians(x4, u, params)
        dk1x, dk1u = A1, B1
        dk2x = A2 @ (eye + 0.5 * h * dk1x)
        dk2u = A2 @ (0.5 * h * dk1u) + B2
        dk3x = A3 @ (eye + 0.5 * h * dk2x)
        dk3u = A3 @ (0.5 * h * dk2u) + B3
        dk4x = A4 @ (eye + h * dk3x)
        dk4u = A4 @ (h * dk3u) + B4
        phis_x[j] = eye + (h / 6.0) * (dk1x + 2.0 * dk2x + 2.0 * dk3x + dk4x)
        phis_u[j] = (h / 6.0) * (dk1u + 2.0 * dk2u + 2.0 * dk3u + dk4u)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise NonFiniteError("rollout diverged in gradient pass")
        xs[j + 1] = x

    grad = np.empty((n, rom.NU))
    lam = np.zeros(rom.NX)
    for j in range(n - 1, -1, -1):
        err = _state_error(xs[j + 1], np.asarray(ref[j], dtype=float))
        _, pgrad = _penalty_and_grad(xs[j + 1], cfg)
        lam = lam + 2.0 * cfg.q_weights * err + pgrad
        grad[j] = phis_u[j].T @ lam + 2.0 * cfg.r_weights * u_seq[j]
        lam = phis_x[j].T @ lam
    return grad


def solve(x0, ref, warm_start, cfg, params, detected_bounds=None):
    """Projected-gradient solution of the horizon problem.

    Returns (u_seq, diagnostics).  Every iterate (and the returned sequence)
    satisfies the detected input bounds elementwise by projection.
    """
    bounds = detected_bounds if detected_bounds is not None else cfg.bounds
    lo, hi = bounds.lower(), bounds.upper()
    n = cfg.horizon
    ref = np.asarray(ref, dtype=float)
    if ref.shape[0] < n:
        raise ValueError(f"reference must cover the horizon ({n} steps)")
    ref = ref[:n]

    u = np.clip(np.atleast_2d(np.asarray(warm_start, dtype=float)).copy(), lo, hi)
    if u.shape != (n, rom.NU):
        raise ValueError(f"warm start must have shape ({n}, {rom.NU})")

    def eval_cost(useq):
        try:
            traj = rollout(x0, useq, cfg, params)
        except (NonFiniteError, GimbalLockError):
            return np.inf
        return total_cost(traj, useq, ref, cfg)

    J = eval_cost(u)
    alpha = 1.0
    iters = 0
    ls_failures = 0
    pgn = np.inf
    converged = False
    failed = False
    u_prev = None
    g_prev = None
    for iters in range(1, cfg.max_iters + 1):
        g = cost_gradient(x0, u, ref, cfg, params)
        pgn = float(np.linalg.norm(u - np.clip(u - g, lo, hi)))
        if pgn < cfg.grad_tol:
            converged = True
            break
        # spectral (Barzilai-Borwein) trial step, safeguarded by Armijo below
        if u_prev is not None:
            s = (u - u_prev).ravel()
            y = (g - g_prev).ravel()
            sy = float(s @ y)
            if sy > 1e-16:
                alpha = float(s @ s) / sy
        u_prev, g_prev = u.copy(), g
        alpha = min(max(alpha, 1e-8), 1e3)
        accepted = False
        while alpha > 1e-14:
            u_new = np.clip(u - alpha * g, lo, hi)
            step = u - u_new
            decrease = float(np.sum(g * step))
            J_new = eval_cost(u_new)
            if J_new <= J - cfg.armijo_c * decrease and np.isfinite(J_new):
                u, J = u_new, J_new
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            ls_failures += 1
            failed = True
            break
    diag = {"iterations": iters, "cost": float(J), "grad_norm": pgn,
            "converged": converged, "line_search_failed": failed}
    return u, diag


def shift_warm_start(u_seq):
    """Receding-horizon warm start: drop the applied input, repeat the last."""
    u = np.asarray(u_seq, dtype=float)
    return np.vstack([u[1:], u[-1:]])


class NmpcController:
    """Stateful receding-horizon wrapper: warm start plus detected bounds."""

    def __init__(self, cfg, params):
        self.cfg = cfg
        self.params = params
        self.detected_bounds = cfg.bounds
        self.warm = np.tile(rom.hover_input(params), (cfg.horizon, 1))

    def set_fault_estimate(self, loe):
        self.detected_bounds = update_detected_bounds(self.cfg.bounds, loe)

    def step(self, x0, ref):
        """Solve from the measured state; returns (first input, diagnostics).

        Two warm starts are tried each period — the shifted previous
        solution and bounds-clipped hover thrusts — and the lower-cost
        solve wins.  The cost landscape is nonconvex and a stale warm
        start can trap the solver in a poor basin right after a fault.
        """
        lo = self.detected_bounds.lower()
        hi = self.detected_bounds.upper()
        hover = np.clip(np.tile(rom.hover_input(self.params),
                                (self.cfg.horizon, 1)), lo, hi)
        warm = np.clip(self.warm, lo, hi)
        u_seq, diag = solve(x0, ref, warm, self.cfg, self.params,
                            self.detected_bounds)
        if not np.allclose(warm, hover, atol=1e-9):
            u_alt, diag_alt = solve(x0, ref, hover, self.cfg, self.params,
                                    self.detected_bounds)
            if diag_alt["cost"] < diag["cost"]:
                u_seq, diag = u_alt, diag_alt
        self.warm = np.clip(shift_warm_start(u_seq), lo, hi)
        return u_seq[0].copy(), diag
