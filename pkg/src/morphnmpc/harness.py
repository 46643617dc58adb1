"""Closed-loop executive: plant + integrator + NMPC + faults + references.

Runs the three study scenarios (hover, cruise failure, multi-phase LoE
waypoint tracking with landing), logs every control step, and computes
recovery/tracking metrics.
"""

from dataclasses import dataclass, field

import numpy as np

from . import faults as faults_mod
from . import hf, nmpc, rom
from .errors import (GimbalLockError, NonFiniteError, SimulationCrash,
                     SingularConfigurationError)

CRASH_ALTITUDE = -0.5          # [m] abort threshold outside landing scenarios
RECOVERY_BAND = np.deg2rad(10.0)
RECOVERY_DWELL = 1.0           # [s]
SATURATION_FRACTION = 0.95


@dataclass
class ReferenceSpec:
    """Position reference program for one scenario.

    kinds: "hover" (hold hover_point), "cruise" (constant-velocity ramp from
    the start point; position freezes at the spot reached when a complete
    rotor failure is detected), "waypoints" (piecewise-linear legs at
    ``speed`` with ``hold`` seconds of stabilization at each point).
    A landing phase may be appended: from ``land_start`` the z reference
    ramps to zero at ``land_rate`` and thrust is cut below ``touchdown_alt``.
    """

    kind: str = "hover"
    hover_point: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 2.0]))
    cruise_velocity: np.ndarray = field(default_factory=lambda: np.array([3.5, 0.0, 0.0]))
    waypoints: np.ndarray = None
    hold: float = 1.0
    speed: float = 1.0
    freeze_on_failure: bool = True
    brake_lead: float = 1.2        # [s] of coasting built into the hold point
    land_start: float = None
    land_rate: float = 0.5
    touchdown_alt: float = 0.05

    def __post_init__(self):
        self.hover_point = np.asarray(self.hover_point, dtype=float)
        self.cruise_velocity = np.asarray(self.cruise_velocity, dtype=float)
        if self.waypoints is not None:
            self.waypoints = np.atleast_2d(np.asarray(self.waypoints, dtype=float))
        if self.kind not in ("hover", "cruise", "waypoints"):
            raise ValueError(f"unknown reference kind {self.kind!r}")
        if self.kind == "waypoints" and self.waypoints is None:
            raise ValueError("waypoints reference needs waypoint list")


@dataclass
class Scenario:
    name: str = "scenario"
    plant: str = "hf"              # "hf" or "rom"
    duration: float = 10.0
    reference: ReferenceSpec = field(default_factory=ReferenceSpec)
    schedule: faults_mod.FaultSchedule = field(default_factory=faults_mod.FaultSchedule)
    start: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 2.0]))
    plant_ceiling: float = 30.0    # physical per-rotor thrust cap [N]
    loe_mode: str = "ceiling"
    substeps: int = 10

    def __post_init__(self):
        self.start = np.asarray(self.start, dtype=float)
        if self.plant not in ("hf", "rom"):
            raise ValueError(f"plant must be 'hf' or 'rom', got {self.plant!r}")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.waypoints_finite() is False:
            raise ValueError("waypoints must be finite")

    def waypoints_finite(self):
        wp = self.reference.waypoints
        return wp is None or bool(np.all(np.isfinite(wp)))


class _Reference:
    """Evaluates the position/velocity reference, tracking freeze state."""

    def __init__(self, spec, start):
        self.spec = spec
        self.start = np.asarray(start, dtype=float)
        self.frozen_pos = None
        self._segments = None
        if spec.kind == "waypoints":
            self._segments = self._build_segments()

    def _build_segments(self):
        spec = self.spec
        pts = np.vstack([self.start, spec.waypoints])
        segs = []   # (t_start, t_end, p0, p1) with holds encoded as p0 == p1
        t = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            segs.append((t, t + spec.hold, a, a))
            t += spec.hold
            dt_leg = float(np.linalg.norm(b - a)) / spec.speed
            segs.append((t, t + dt_leg, a, b))
            t += dt_leg
        return segs

    def freeze(self, pos):
        """Pin the position reference (post-failure 'hold current position')."""
        if self.frozen_pos is None:
            self.frozen_pos = np.asarray(pos, dtype=float).copy()

    def base(self, t):
        """(position, velocity) reference before landing/freeze shaping."""
        spec = self.spec
        if spec.kind == "hover":
            return spec.hover_point.copy(), np.zeros(3)
        if spec.kind == "cruise":
            return self.start + spec.cruise_velocity * t, spec.cruise_velocity.copy()
        for (t0, t1, a, b) in self._segments:
            if t < t1:
                if t1 == t0 or np.array_equal(a, b):
                    return a.copy(), np.zeros(3)
                s = (t - t0) / (t1 - t0)
                return a + s * (b - a), (b - a) / (t1 - t0)
        last = self._segments[-1][3]
        return last.copy(), np.zeros(3)

    def at(self, t):
        spec = self.spec
        pos, vel = self.base(t)
        if self.frozen_pos is not None:
            pos, vel = self.frozen_pos.copy(), np.zeros(3)
        if spec.land_start is not None and t >= spec.land_start:
            p0, _ = self.at_nolanding(spec.land_start)
            z = max(p0[2] - spec.land_rate * (t - spec.land_start), 0.0)
            pos = np.array([p0[0], p0[1], z])
            vel = np.array([0.0, 0.0, -spec.land_rate if z > 0.0 else 0.0])
        return pos, vel

    def at_nolanding(self, t):
        pos, vel = self.base(t)
        if self.frozen_pos is not None:
            pos, vel = self.frozen_pos.copy(), np.zeros(3)
        return pos, vel

    def horizon_targets(self, t, cfg, params):
        """Full-state targets for the predicted states x_1..x_N."""
        ref = np.zeros((cfg.horizon, rom.NX))
        for j in range(cfg.horizon):
            pos, vel = self.at(t + (j + 1) * cfg.dt)
            ref[j, rom.P] = pos
            ref[j, rom.QA] = params.q_nominal
            ref[j, rom.V] = vel
        return ref


COLUMNS = (
    ["t", "x", "y", "z", "roll", "pitch", "yaw",
     "q1", "q2", "q3", "q4", "vx", "vy", "vz", "wx", "wy", "wz",
     "qd1", "qd2", "qd3", "qd4"]
    + [f"cmd_thrust_{k}" for k in range(1, 5)]
    + [f"jacc_{k}" for k in range(1, 5)]
    + [f"thrust_{k}" for k in range(1, 5)]
    + [f"max_thrust_{k}" for k in range(1, 5)]
    + ["ref_x", "ref_y", "ref_z", "refv_x", "refv_y", "refv_z",
       "nmpc_iters", "nmpc_cost", "nmpc_grad_norm"]
)


@dataclass
class SimLog:
    """Per-control-step record of a closed-loop run (uniform time grid)."""

    data: np.ndarray                # (rows, len(COLUMNS))
    scenario_name: str = ""
    dt: float = 0.1
    fault_time: float = None        # first fault event start, if any
    complete_failure_time: float = None
    landing: bool = False
    touchdown_time: float = None
    config_fingerprint: str = ""

    def col(self, name):
        return self.data[:, COLUMNS.index(name)]

    @property
    def t(self):
        return self.col("t")

    def state(self):
        return self.data[:, 1:21]

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(COLUMNS) + "\n")
            for row in self.data:
                fh.write(",".join(f"{v:.9g}" for v in row) + "\n")

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if header != COLUMNS:
                raise ValueError("unexpected log header")
            data = np.loadtxt(fh, delimiter=",")
        return cls(data=np.atleast_2d(data))


@dataclass
class Metrics:
    """Derived scenario metrics; None marks quantities without meaning
    for the run (e.g. recovery time when no fault occurred)."""

    recovered: bool = None
    recovery_time: float = None           # [s] after the fault
    max_attitude_excursion: float = None  # [rad], post-fault
    rmse: np.ndarray = None               # per-axis position RMSE [m]
    yaw_rate_saturation: float = None     # [rad/s]
    yaw_rate_analytic: float = None       # drag fixed point [rad/s]
    time_to_saturation: float = None      # [s] after complete failure
    touchdown_speed: float = None         # [m/s]
    final_altitude: float = None

    def to_dict(self):
        out = {}
        for k, v in self.__dict__.items():
            if v is None:
                continue
            if isinstance(v, np.ndarray):
                for ax, name in zip(v, ("x", "y", "z")):
                    out[f"{k}_{name}"] = float(ax)
            else:
                out[k] = float(v) if not isinstance(v, bool) else v
        return out

    def write(self, path):
        with open(path, "w") as fh:
            for k, v in self.to_dict().items():
                fh.write(f"{k}={v}\n")


def run_closed_loop(scenario, params, cfg, controller=None):
    """Simulate one scenario; returns a SimLog.

    Control period cfg.dt with zero-order-hold inputs; the plant advances
    ``scenario.substeps`` RK4 substeps per period.  Raises SimulationCrash
    (carrying the partial log) on non-finite states or ground impact
    outside the landing phase.
    """
    spec = scenario.reference
    refgen = _Reference(spec, scenario.start)
    if controller is None:
        controller = nmpc.NmpcController(cfg, params)
    schedule = scenario.schedule

    n_steps = int(round(scenario.duration / cfg.dt))
    rows = np.zeros((n_steps + 1, len(COLUMNS)))
    use_hf = scenario.plant == "hf"

    x_rom0 = rom.hover_state(params, scenario.start)
    x_plant = hf.hf_from_rom(x_rom0) if use_hf else x_rom0.copy()
    h_sub = cfg.dt / scenario.substeps
    dyn = hf.hf_dynamics if use_hf else rom.rom_dynamics

    touchdown_time = None
    events = sorted(schedule.events, key=lambda e: e.t_start)
    fault_time = events[0].t_start if events else None
    complete = [e.t_start for e in events if e.loe >= 1.0]
    complete_failure_time = min(complete) if complete else None

    def make_log(data):
        return SimLog(data=data, scenario_name=scenario.name, dt=cfg.dt,
                      fault_time=fault_time,
                      complete_failure_time=complete_failure_time,
                      landing=spec.land_start is not None,
                      touchdown_time=touchdown_time,
                      config_fingerprint=cfg.fingerprint())

    for i in range(n_steps + 1):
        t = i * cfg.dt
        x_rom = hf.rom_from_hf(x_plant) if use_hf else x_plant.copy()

        # oracle fault detection with one-period delay
        loe_det = schedule.loe_vector(t - cfg.detection_delay)
        controller.set_fault_estimate(loe_det)
        if spec.freeze_on_failure and np.any(loe_det >= 1.0):
            # hold point leads the vehicle by its braking distance so the
            # recovery transient does not have to backtrack under spin
            base_pos, _ = refgen.base(t)
            hold = x_rom[rom.P] + spec.brake_lead * x_rom[rom.V]
            hold[2] = base_pos[2]
            refgen.freeze(hold)

        landed = touchdown_time is not None
        in_landing = spec.land_start is not None and t >= spec.land_start
        if in_landing and not landed and x_rom[2] <= spec.touchdown_alt:
            touchdown_time = t
            landed = True

        if landed:
            u0 = np.zeros(rom.NU)
            diag = {"iterations": 0, "cost": 0.0, "grad_norm": 0.0}
        else:
            ref = refgen.horizon_targets(t, cfg, params)
            u0, diag = controller.step(x_rom, ref)

        eff = faults_mod.effective_thrust(
            u0[:4], t, schedule, scenario.plant_ceiling,
            mode=scenario.loe_mode, hover_thrust=params.hover_thrust)
        ref_pos, ref_vel = refgen.at(t)
        rows[i] = np.concatenate([
            [t], x_rom, u0[:4], u0[4:], eff,
            controller.detected_bounds.thrust_max, ref_pos, ref_vel,
            [diag["iterations"], diag["cost"], diag["grad_norm"]]])

        if i == n_steps:
            break
        if landed:
            continue  # grounded: state holds (contact is out of scope)

        try:
            for s in range(scenario.substeps):
                t_sub = t + s * h_sub
                eff_sub = faults_mod.effective_thrust(
                    u0[:4], t_sub, schedule, scenario.plant_ceiling,
                    mode=scenario.loe_mode, hover_thrust=params.hover_thrust)
                u_plant = np.concatenate([eff_sub, u0[4:]])
                k1 = dyn(x_plant, u_plant, params)
                k2 = dyn(x_plant + 0.5 * h_sub * k1, u_plant, params)
                k3 = dyn(x_plant + 0.5 * h_sub * k2, u_plant, params)
                k4 = dyn(x_plant + h_sub * k3, u_plant, params)
                x_plant = x_plant + (h_sub / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        except (NonFiniteError, GimbalLockError, SingularConfigurationError) as exc:
            raise SimulationCrash(f"plant failure at t={t:.2f}: {exc}",
                                  log=make_log(rows[: i + 1])) from exc
        if not np.all(np.isfinite(x_plant)):
            raise SimulationCrash(f"non-finite plant state at t={t:.2f}",
                                  log=make_log(rows[: i + 1]))
        z = x_plant[2]
        if z < CRASH_ALTITUDE and spec.land_start is None:
            raise SimulationCrash(f"altitude {z:.2f} m below crash threshold "
                                  f"at t={t:.2f}", log=make_log(rows[: i + 1]))

    return make_log(rows)


def compute_metrics(log, params=None):
    """Pure function of a SimLog (plus params for the analytic yaw fixed point)."""
    m = Metrics()
    t = log.t
    dt = log.dt
    err = np.column_stack([log.col("x") - log.col("ref_x"),
                           log.col("y") - log.col("ref_y"),
                           log.col("z") - log.col("ref_z")])
    m.rmse = np.sqrt(np.mean(err ** 2, axis=0))
    m.final_altitude = float(log.col("z")[-1])

    if log.fault_time is not None:
        post = t >= log.fault_time
        roll, pitch = log.col("roll")[post], log.col("pitch")[post]
        m.max_attitude_excursion = float(np.max(np.maximum(np.abs(roll), np.abs(pitch))))
        dwell = max(int(round(RECOVERY_DWELL / dt)), 1)
        inside = (np.abs(roll) < RECOVERY_BAND) & (np.abs(pitch) < RECOVERY_BAND)
        m.recovered = False
        for i in range(len(inside) - dwell):
            if np.all(inside[i:i + dwell + 1]):
                m.recovered = True
                m.recovery_time = float(t[post][i] - log.fault_time)
                break

    if log.complete_failure_time is not None:
        t_end = log.touchdown_time if log.touchdown_time is not None else t[-1]
        win = (t >= log.complete_failure_time) & (t <= t_end)
        wz = log.col("wz")[win]
        tw = t[win]
        if len(wz) > int(1.0 / dt) + 2:
            tail = wz[tw >= tw[-1] - 1.0]
            m.yaw_rate_saturation = float(np.mean(tail))
            target = SATURATION_FRACTION * abs(m.yaw_rate_saturation)
            sgn = np.sign(m.yaw_rate_saturation)
            reached = sgn * wz >= target
            for i in range(len(reached)):
                if np.all(reached[i:]):
                    m.time_to_saturation = float(tw[i] - log.complete_failure_time)
                    break
            if params is not None:
                m.yaw_rate_analytic = _analytic_yaw_rate(log, params, tw[-1])

    if log.touchdown_time is not None:
        idx = np.searchsorted(t, log.touchdown_time)
        m.touchdown_speed = float(abs(log.col("vz")[idx]))
    return m


def _analytic_yaw_rate(log, params, t_end):
    """Drag fixed point: mean steady yaw moment / yaw drag coefficient."""
    sel = (log.t >= t_end - 1.0) & (log.t <= t_end)
    taus = []
    for i in np.nonzero(sel)[0]:
        q_a = log.data[i, 7:11]
        thr = [log.col(f"thrust_{k}")[i] for k in range(1, 5)]
        taus.append(rom.net_wrench(q_a, thr, params).torque[2])
    return float(np.mean(taus) / params.drag_ang[2])


def model_matching(x0, u_of_t, duration, params, h=0.01):
    """Open-loop ROM vs HF comparison from the same state and input schedule.

    Returns (report, t, rom_traj, hf_traj_as_rom); the report maps channel
    name -> max absolute deviation over the window.
    """
    x0 = np.asarray(x0, dtype=float)
    n = int(round(duration / h))
    xr = x0.copy()
    xh = hf.hf_from_rom(x0)
    ts = np.arange(n + 1) * h
    tr = np.empty((n + 1, rom.NX))
    th_ = np.empty((n + 1, rom.NX))
    tr[0] = xr
    th_[0] = hf.rom_from_hf(xh)
    for i in range(n):
        u = np.asarray(u_of_t(ts[i]), dtype=float)
        k1 = rom.rom_dynamics(xr, u, params)
        k2 = rom.rom_dynamics(xr + 0.5 * h * k1, u, params)
        k3 = rom.rom_dynamics(xr + 0.5 * h * k2, u, params)
        k4 = rom.rom_dynamics(xr + h * k3, u, params)
        xr = xr + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        k1 = hf.hf_dynamics(xh, u, params)
        k2 = hf.hf_dynamics(xh + 0.5 * h * k1, u, params)
        k3 = hf.hf_dynamics(xh + 0.5 * h * k2, u, params)
        k4 = hf.hf_dynamics(xh + h * k3, u, params)
        xh = xh + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        tr[i + 1] = xr
        th_[i + 1] = hf.rom_from_hf(xh)
    names = ["x", "y", "z", "roll", "pitch", "yaw"]
    dev = np.max(np.abs(tr[:, :6] - th_[:, :6]), axis=0)
    return dict(zip(names, dev.tolist())), ts, tr, th_
