"""INI scenario/configuration files: strict schema, overrides, round-trip.

Four sections: [robot] physical parameters, [nmpc] controller settings,
[scenario] reference + fault program, [sim] plant selection.  Unknown
sections or keys are rejected by name so typos cannot silently fall back
to defaults.
"""

import configparser
import io

import numpy as np

from . import faults as faults_mod
from . import harness, nmpc, rom
from .errors import ConfigError
from .params import HfParams

# key -> (type tag, required).  Vectors are whitespace-separated floats;
# fault events are "t_start t_end rotor loe" tuples separated by ';'.
SCHEMA = {
    "robot": {
        "m_b": ("float", True),
        "m_l": ("float", True),
        "ixx": ("float", False),
        "iyy": ("float", False),
        "izz": ("float", False),
        "c_m": ("float", False),
        "g": ("float", False),
        "drag_lin": ("vec3", False),
        "drag_ang": ("vec3", False),
        "q_nominal_deg": ("float", False),
    },
    "nmpc": {
        "horizon": ("int", True),
        "dt": ("float", True),
        "max_iters": ("int", False),
        "grad_tol": ("float", False),
        "penalty_weight": ("float", False),
        "detection_delay": ("float", False),
        "thrust_min": ("float", False),
        "thrust_max": ("float", False),
        "joint_acc_limit": ("float", False),
    },
    "scenario": {
        "name": ("str", True),
        "duration": ("float", True),
        "reference": ("str", False),       # hover | cruise | waypoints
        "start": ("vec3", False),
        "hover_point": ("vec3", False),
        "cruise_velocity": ("vec3", False),
        "waypoints": ("veclist", False),
        "hold": ("float", False),
        "speed": ("float", False),
        "freeze_on_failure": ("bool", False),
        "brake_lead": ("float", False),
        "land_start": ("float", False),
        "land_rate": ("float", False),
        "touchdown_alt": ("float", False),
        "faults": ("faultlist", False),
        "plant_ceiling": ("float", False),
        "loe_mode": ("str", False),
    },
    "sim": {
        "plant": ("str", True),
        "substeps": ("int", False),
    },
}


def _parse_value(raw, kind, where):
    raw = raw.strip()
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            v = float(raw)
            if v != int(v):
                raise ValueError("not an integer")
            return int(v)
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError("not a boolean")
        if kind == "vec3":
            v = [float(x) for x in raw.split()]
            if len(v) != 3:
                raise ValueError("expected 3 components")
            return v
        if kind == "veclist":
            return [_parse_value(part, "vec3", where)
                    for part in raw.split(";") if part.strip()]
        if kind == "faultlist":
            out = []
            for part in raw.split(";"):
                if not part.strip():
                    continue
                f = [float(x) for x in part.split()]
                if len(f) != 4:
                    raise ValueError("fault events are 't_start t_end rotor loe'")
                out.append((f[0], f[1], int(f[2]), f[3]))
            return out
        return raw  # str
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {kind}: {exc}") from exc


def _format_value(v, kind):
    if kind == "vec3":
        return " ".join(f"{x:.9g}" for x in v)
    if kind == "veclist":
        return "; ".join(" ".join(f"{x:.9g}" for x in vec) for vec in v)
    if kind == "faultlist":
        return "; ".join(f"{a:.9g} {b:.9g} {r} {l:.9g}" for (a, b, r, l) in v)
    if kind == "bool":
        return "true" if v else "false"
    if kind == "float":
        return f"{v:.9g}"
    return str(v)


class AppConfig:
    """Validated configuration: a flat {(section, key): value} mapping."""

    def __init__(self, values):
        self.values = dict(values)

    def __eq__(self, other):
        return isinstance(other, AppConfig) and self.values == other.values

    def get(self, section, key, default=None):
        return self.values.get((section, key), default)

    def serialize(self):
        """Canonical INI text; load(serialize(c)) == c."""
        out = io.StringIO()
        for section in SCHEMA:
            keys = [k for (s, k) in self.values if s == section]
            if not keys:
                continue
            out.write(f"[{section}]\n")
            for key in SCHEMA[section]:
                if key in keys:
                    kind = SCHEMA[section][key][0]
                    out.write(f"{key} = {_format_value(self.values[(section, key)], kind)}\n")
            out.write("\n")
        return out.getvalue()

    def build(self):
        """Instantiate (HfParams, NmpcConfig, Scenario) from the values."""
        g = self.get
        pkw = {"m_b": g("robot", "m_b"), "m_l": g("robot", "m_l")}
        inertia = [g("robot", "ixx"), g("robot", "iyy"), g("robot", "izz")]
        if any(v is not None for v in inertia):
            base = HfParams()
            diag = [v if v is not None else float(base.I_b[i, i])
                    for i, v in enumerate(inertia)]
            pkw["I_b"] = np.diag(diag)
        for src, dst in (("c_m", "c_m"), ("g", "g"), ("drag_lin", "drag_lin"),
                         ("drag_ang", "drag_ang")):
            if g("robot", src) is not None:
                pkw[dst] = g("robot", src)
        if g("robot", "q_nominal_deg") is not None:
            pkw["q_nominal"] = np.deg2rad(g("robot", "q_nominal_deg"))
        params = HfParams(**pkw)

        ckw = {"horizon": g("nmpc", "horizon"), "dt": g("nmpc", "dt")}
        for key in ("max_iters", "grad_tol", "penalty_weight", "detection_delay"):
            if g("nmpc", key) is not None:
                ckw[key] = g("nmpc", key)
        bkw = {}
        if g("nmpc", "thrust_min") is not None:
            bkw["thrust_min"] = g("nmpc", "thrust_min")
        if g("nmpc", "thrust_max") is not None:
            bkw["thrust_max"] = g("nmpc", "thrust_max")
        if g("nmpc", "joint_acc_limit") is not None:
            lim = g("nmpc", "joint_acc_limit")
            bkw["joint_acc_min"] = -lim
            bkw["joint_acc_max"] = lim
        if bkw:
            ckw["bounds"] = nmpc.InputBounds(**bkw)
        cfg = nmpc.NmpcConfig(**ckw)

        rkw = {"kind": g("scenario", "reference", "hover")}
        for key in ("hover_point", "cruise_velocity", "waypoints", "hold",
                    "speed", "freeze_on_failure", "brake_lead", "land_start",
                    "land_rate", "touchdown_alt"):
            if g("scenario", key) is not None:
                rkw[key] = g("scenario", key)
        if rkw.get("waypoints") is not None:
            rkw["waypoints"] = np.asarray(rkw["waypoints"], dtype=float)
        ref = harness.ReferenceSpec(**rkw)

        skw = {"name": g("scenario", "name"),
               "duration": g("scenario", "duration"),
               "reference": ref,
               "plant": g("sim", "plant"),
               "schedule": faults_mod.FaultSchedule(g("scenario", "faults", []))}
        if g("scenario", "start") is not None:
            skw["start"] = np.asarray(g("scenario", "start"), dtype=float)
        for key in ("plant_ceiling", "loe_mode"):
            if g("scenario", key) is not None:
                skw[key] = g("scenario", key)
        if g("sim", "substeps") is not None:
            skw["substeps"] = g("sim", "substeps")
        try:
            scenario = harness.Scenario(**skw)
        except ValueError as exc:
            raise ConfigError(f"[scenario]: {exc}") from exc
        if scenario.plant not in ("hf", "rom"):
            raise ConfigError(f"[sim].plant must be hf or rom, got {scenario.plant!r}")
        return params, cfg, scenario


def _validate(cp):
    values = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key [{section}].{key}")
            kind = SCHEMA[section][key][0]
            values[(section, key)] = _parse_value(raw, kind, f"[{section}].{key}")
    for section, keys in SCHEMA.items():
        for key, (kind, required) in keys.items():
            if required and (section, key) not in values:
                raise ConfigError(f"missing required key [{section}].{key}")
    return AppConfig(values)


def loads(text):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return _validate(cp)


def load(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return loads(text)


def apply_overrides(config, overrides):
    """Apply "section.key=value" strings left to right; returns a new AppConfig."""
    values = dict(config.values)
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must be section.key=value, got {item!r}")
        target, raw = item.split("=", 1)
        section, key = target.split(".", 1)
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown key [{section}].{key}")
        kind = SCHEMA[section][key][0]
        values[(section, key)] = _parse_value(raw, kind, f"[{section}].{key}")
    return AppConfig(values)
