"""Plant-side rotor fault injection: scheduled loss of effectiveness.

A fault event caps one rotor's achievable thrust over a half-open time
interval [t_start, t_end).  Severity ``loe`` is the fractional loss; by
default it scales the rotor's maximum-thrust ceiling ("ceiling" mode).
"hover" mode instead caps at (1 - loe) times hover thrust.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class FaultEvent:
    t_start: float
    t_end: float        # np.inf for an open-ended event
    rotor: int          # 1-based rotor index
    loe: float          # loss fraction in [0, 1]

    def __post_init__(self):
        if not 1 <= self.rotor <= 4:
            raise ValueError(f"rotor index must be 1..4, got {self.rotor}")
        if not 0.0 <= self.loe <= 1.0:
            raise ValueError(f"loe must lie in [0, 1], got {self.loe}")
        if not self.t_end > self.t_start:
            raise ValueError("event must have t_end > t_start")


@dataclass
class FaultSchedule:
    """Piecewise-constant per-rotor loss of effectiveness over time."""

    events: list = field(default_factory=list)

    def __post_init__(self):
        self.events = [e if isinstance(e, FaultEvent) else FaultEvent(*e)
                       for e in self.events]
        for rotor in range(1, 5):
            evs = sorted((e for e in self.events if e.rotor == rotor),
                         key=lambda e: e.t_start)
            for a, b in zip(evs, evs[1:]):
                if b.t_start < a.t_end:
                    raise ValueError(
                        f"overlapping fault events for rotor {rotor}: "
                        f"[{a.t_start}, {a.t_end}) and [{b.t_start}, {b.t_end})")

    def loe_at(self, rotor, t):
        """Loss fraction for a rotor (1-based) at time t; 0 outside events."""
        for e in self.events:
            if e.rotor == rotor and e.t_start <= t < e.t_end:
                return e.loe
        return 0.0

    def loe_vector(self, t):
        return np.array([self.loe_at(k, t) for k in range(1, 5)])


def loe_at(schedule, rotor, t):
    return schedule.loe_at(rotor, t)


def effective_thrust(commanded, t, schedule, plant_ceiling, mode="ceiling",
                     hover_thrust=None):
    """Thrust each rotor actually produces at time t.

    Healthy rotors saturate at plant_ceiling; a faulted rotor's cap shrinks
    by its loss fraction (of the ceiling, or of hover thrust in "hover"
    mode, floored at zero).
    """
    commanded = np.asarray(commanded, dtype=float)
    if np.any(commanded < 0):
        raise ValueError("commanded thrusts must be nonnegative")
    loe = schedule.loe_vector(t)
    if mode == "ceiling":
        cap = plant_ceiling * (1.0 - loe)
    elif mode == "hover":
        if hover_thrust is None:
            raise ValueError("hover mode needs hover_thrust")
        cap = np.where(loe > 0.0,
                       np.maximum(hover_thrust * (1.0 - loe), 0.0),
                       plant_ceiling)
        cap = np.minimum(cap, plant_ceiling)
    else:
        raise ValueError(f"unknown LoE mode {mode!r}")
    return np.minimum(commanded, cap)
