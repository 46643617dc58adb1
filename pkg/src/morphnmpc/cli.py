"""Command-line front end.

Subcommands: run (simulate a scenario file), match (open-loop model
comparison), sweep (grid of runs over fault time), series (extract
two-column plot data from a log), selftest (quick invariant suite).

Exit codes: 0 success, 1 configuration/usage error, 2 simulation crash.
"""

import argparse
import os
import sys

import numpy as np

from . import config as config_mod
from . import faults as faults_mod
from . import harness, hf, integrators, nmpc, rom
from .errors import ConfigError, SimulationCrash
from .params import HfParams


def default_out_dir():
    return os.environ.get("MORPHNMPC_OUT", "morphnmpc_out")


def _load_config(path, args):
    cfg = config_mod.load(path)
    overrides = list(getattr(args, "override", None) or [])
    if getattr(args, "plant", None):
        overrides.append(f"sim.plant={args.plant}")
    return config_mod.apply_overrides(cfg, overrides)


def emit_series(log, channels, out_dir):
    """Write one two-column (t, value) text file per channel.

    Raises ConfigError listing the available channels on an unknown name.
    """
    for ch in channels:
        if ch not in harness.COLUMNS or ch == "t":
            raise ConfigError(
                f"unknown channel {ch!r}; available: "
                + ", ".join(c for c in harness.COLUMNS if c != "t"))
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for ch in channels:
        path = os.path.join(out_dir, f"series_{ch}.txt")
        with open(path, "w") as fh:
            for ti, vi in zip(log.t, log.col(ch)):
                fh.write(f"{ti:.9g} {vi:.9g}\n")
        paths.append(path)
    return paths


def _write_run_outputs(log, params, out_dir, series=None):
    os.makedirs(out_dir, exist_ok=True)
    log.to_csv(os.path.join(out_dir, "log.csv"))
    metrics = harness.compute_metrics(log, params)
    metrics.write(os.path.join(out_dir, "metrics.txt"))
    if series:
        emit_series(log, series, out_dir)
    return metrics


def cmd_run(args):
    app = _load_config(args.scenario, args)
    params, cfg, scenario = app.build()
    out_dir = args.out or os.path.join(default_out_dir(), scenario.name)
    try:
        log = harness.run_closed_loop(scenario, params, cfg)
    except SimulationCrash as exc:
        print(f"simulation crash: {exc}", file=sys.stderr)
        if exc.log is not None:
            _write_run_outputs(exc.log, params, out_dir, args.series)
            print(f"partial log written to {out_dir}", file=sys.stderr)
        return 2
    metrics = _write_run_outputs(log, params, out_dir, args.series)
    print(f"wrote {out_dir}/log.csv ({log.data.shape[0]} rows)")
    for k, v in metrics.to_dict().items():
        print(f"  {k}={v}")
    return 0


def cmd_match(args):
    params = HfParams()
    x0 = rom.hover_state(params, (0.0, 0.0, 2.0))
    hover = rom.hover_input(params)

    def u_of_t(t):
        u = hover.copy()
        if t >= args.cut_time:
            u[args.rotor - 1] = 0.0
        return u

    report, ts, tr, th = harness.model_matching(
        x0, u_of_t, args.duration, params, h=args.step)
    print(f"open-loop divergence over {args.duration} s "
          f"(rotor {args.rotor} off at {args.cut_time} s):")
    for name, dev in report.items():
        unit = "m" if name in ("x", "y", "z") else "rad"
        extra = f" ({np.rad2deg(dev):.3f} deg)" if unit == "rad" else ""
        print(f"  {name}: {dev:.6f} {unit}{extra}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "match.txt")
        with open(path, "w") as fh:
            for name, dev in report.items():
                fh.write(f"{name}={dev:.9g}\n")
        print(f"wrote {path}")
    return 0


def _parse_grid(spec):
    try:
        a, b, step = (float(x) for x in spec.split(":"))
    except ValueError as exc:
        raise ConfigError(f"--fault-time must be a:b:step, got {spec!r}") from exc
    if step <= 0 or b < a:
        raise ConfigError("--fault-time grid must have step > 0 and b >= a")
    return np.arange(a, b + 1e-9, step)


def cmd_sweep(args):
    app = _load_config(args.scenario, args)
    grid = _parse_grid(args.fault_time)
    params, cfg, base = app.build()
    if not base.schedule.events:
        raise ConfigError("sweep needs a scenario with at least one fault event")
    base_start = min(e.t_start for e in base.schedule.events)
    out_root = args.out or os.path.join(default_out_dir(),
                                        f"{base.name}_sweep")
    rows = []
    for ft in grid:
        shift = ft - base_start
        shifted = faults_mod.FaultSchedule(
            [(e.t_start + shift, e.t_end + shift, e.rotor, e.loe)
             for e in base.schedule.events])
        scenario = harness.Scenario(
            name=f"{base.name}_t{ft:g}", plant=base.plant,
            duration=base.duration, reference=base.reference,
            schedule=shifted, start=base.start,
            plant_ceiling=base.plant_ceiling, loe_mode=base.loe_mode,
            substeps=base.substeps)
        run_dir = os.path.join(out_root, f"fault_{ft:g}")
        try:
            log = harness.run_closed_loop(scenario, params, cfg)
        except SimulationCrash as exc:
            rows.append((ft, None))
            os.makedirs(run_dir, exist_ok=True)
            if exc.log is not None:
                exc.log.to_csv(os.path.join(run_dir, "log.csv"))
            continue
        metrics = _write_run_outputs(log, params, run_dir)
        rows.append((ft, metrics))
    os.makedirs(out_root, exist_ok=True)
    table = os.path.join(out_root, "sweep.txt")
    with open(table, "w") as fh:
        fh.write("fault_time recovered recovery_time rmse_x rmse_y rmse_z\n")
        for ft, m in rows:
            if m is None:
                fh.write(f"{ft:.9g} crashed - - - -\n")
                continue
            rec = "-" if m.recovery_time is None else f"{m.recovery_time:.9g}"
            fh.write(f"{ft:.9g} {m.recovered} {rec} "
                     + " ".join(f"{v:.9g}" for v in m.rmse) + "\n")
    print(f"wrote {table} ({len(rows)} runs)")
    return 0


def cmd_series(args):
    log = harness.SimLog.from_csv(args.log)
    out_dir = args.out or os.path.dirname(os.path.abspath(args.log))
    paths = emit_series(log, args.channels, out_dir)
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_selftest(args):
    params = HfParams()
    checks = []

    x_hover = rom.hover_state(params, (0.0, 0.0, 1.0))
    u_hover = rom.hover_input(params)
    checks.append(("rom hover fixed point",
                   float(np.max(np.abs(rom.rom_dynamics(x_hover, u_hover, params)))) < 1e-9))
    xh = hf.hf_from_rom(x_hover)
    checks.append(("hf hover fixed point",
                   float(np.max(np.abs(hf.hf_dynamics(xh, u_hover, params)))) < 1e-9))

    rng = np.random.default_rng(0)
    spd_ok = True
    for _ in range(25):
        q_a = rng.uniform(0.0, np.pi / 2, 4)
        x = rom.hover_state(params)
        x[rom.QA] = q_a
        M = hf.mass_matrix(hf.hf_from_rom(x)[:hf.NQ], params)
        spd_ok &= bool(np.all(np.linalg.eigvalsh(M) > 0))
    checks.append(("mass matrix SPD (25 postures)", spd_ok))

    # RK4 order on dx/dt = x over [0, 1]
    errs = []
    for n in (10, 20):
        x = np.array([1.0])
        for _ in range(n):
            x = integrators.rk4_step(lambda s, u: s, x, None, 1.0 / n)
        errs.append(abs(float(x[0]) - np.e))
    slope = np.log2(errs[0] / errs[1])
    checks.append(("rk4 4th order", 3.8 < slope < 4.2))

    cfg = nmpc.NmpcConfig()
    ref = np.tile(x_hover, (cfg.horizon, 1))
    u_seq = np.tile(u_hover, (cfg.horizon, 1))
    g = nmpc.cost_gradient(x_hover, u_seq, ref, cfg, params)
    eps = 1e-6
    up = u_seq.copy(); up[0, 0] += eps
    um = u_seq.copy(); um[0, 0] -= eps
    fd = (nmpc.total_cost(nmpc.rollout(x_hover, up, cfg, params), up, ref, cfg)
          - nmpc.total_cost(nmpc.rollout(x_hover, um, cfg, params), um, ref, cfg)) / (2 * eps)
    checks.append(("nmpc gradient vs FD",
                   abs(g[0, 0] - fd) / max(abs(fd), 1e-12) < 1e-4))

    ok = True
    for name, passed in checks:
        print(f"  {'PASS' if passed else 'FAIL'}  {name}")
        ok &= passed
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="morphnmpc",
        description="Closed-loop fault-recovery simulation for a morphing quadrotor")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario config file")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", help="output directory")
    p_run.add_argument("--plant", choices=("hf", "rom"))
    p_run.add_argument("--override", action="append", default=[],
                       metavar="SECTION.KEY=VALUE")
    p_run.add_argument("--series", type=lambda s: s.split(","), default=None,
                       help="comma-separated channels to emit as plot data")
    p_run.set_defaults(func=cmd_run)

    p_match = sub.add_parser("match", help="open-loop model comparison")
    p_match.add_argument("--duration", type=float, default=0.7)
    p_match.add_argument("--cut-time", type=float, default=0.2)
    p_match.add_argument("--rotor", type=int, default=4, choices=(1, 2, 3, 4))
    p_match.add_argument("--step", type=float, default=0.01)
    p_match.add_argument("--out")
    p_match.set_defaults(func=cmd_match)

    p_sweep = sub.add_parser("sweep", help="grid of runs over fault time")
    p_sweep.add_argument("scenario")
    p_sweep.add_argument("--fault-time", required=True, metavar="A:B:STEP")
    p_sweep.add_argument("--out")
    p_sweep.add_argument("--plant", choices=("hf", "rom"))
    p_sweep.add_argument("--override", action="append", default=[],
                         metavar="SECTION.KEY=VALUE")
    p_sweep.set_defaults(func=cmd_sweep)

    p_series = sub.add_parser("series", help="extract plot data from a log")
    p_series.add_argument("log")
    p_series.add_argument("channels", nargs="+")
    p_series.add_argument("--out")
    p_series.set_defaults(func=cmd_series)

    p_self = sub.add_parser("selftest", help="quick invariant suite")
    p_self.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
