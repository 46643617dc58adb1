"""Robot parameter sets shared by the reduced-order and high-fidelity models.

Geometry conventions
--------------------
Legs are indexed (0) front-left, (1) front-right, (2) rear-left,
(3) rear-right.  The hip sagittal joint rotates each leg about the body
y-axis; q = 0 points the leg straight down and q = 90 deg extends it
horizontally outward (fore for front legs, aft for rear legs).  The thruster
sits at the leg tip, laterally offset by ``lat_offset`` from the sagittal
plane, and its axis tilts with the leg so that at the nominal flight posture
``q_nominal`` every thrust axis is body +z.
"""

from dataclasses import dataclass, field, replace

import numpy as np

# fore/aft and left/right signs per leg (FL, FR, RL, RR)
LEG_SIGN_X = np.array([1.0, 1.0, -1.0, -1.0])
LEG_SIGN_Y = np.array([1.0, -1.0, 1.0, -1.0])


def _default_hip_offsets():
    return np.column_stack([0.16 * LEG_SIGN_X, 0.16 * LEG_SIGN_Y, np.zeros(4)])


def _default_inertia():
    return np.diag([0.08, 0.13, 0.15])


@dataclass
class RobotParams:
    """Physical parameters shared by the ROM and the high-fidelity plant.

    Defaults reproduce a 6.0 kg vehicle whose propeller axes sit 0.45 m
    apart along each body axis at the nominal 45 deg flight posture.
    """

    m_b: float = 4.8                      # main body mass [kg]
    m_l: float = 0.3                      # lumped mass per leg [kg]
    I_b: np.ndarray = field(default_factory=_default_inertia)  # body inertia [kg m^2]
    hip_offsets: np.ndarray = field(default_factory=_default_hip_offsets)  # [m], 4x3
    L_leg: float = 0.065 / np.sin(np.pi / 4.0)  # hip-to-tip sagittal length [m]
    lat_offset: float = 0.065             # lateral tip offset from hip [m]
    q_nominal: float = np.pi / 4.0        # flight posture joint angle [rad]
    c_m: float = 0.02                     # thrust-to-yaw-moment coefficient [m]
    spin_dirs: np.ndarray = field(default_factory=lambda: np.array([1.0, -1.0, -1.0, 1.0]))
    drag_lin: np.ndarray = field(default_factory=lambda: np.array([0.55, 0.55, 0.8]))   # [N s/m]
    drag_ang: np.ndarray = field(default_factory=lambda: np.array([0.08, 0.08, 0.12]))  # [N m s/rad]
    g: float = 9.81                       # gravitational acceleration [m/s^2]
    leg_com_fraction: float = 1.9 / 3.0   # leg mass centroid, fraction of L_leg

    def __post_init__(self):
        self.I_b = np.asarray(self.I_b, dtype=float)
        self.hip_offsets = np.asarray(self.hip_offsets, dtype=float)
        self.spin_dirs = np.asarray(self.spin_dirs, dtype=float)
        self.drag_lin = np.asarray(self.drag_lin, dtype=float)
        self.drag_ang = np.asarray(self.drag_ang, dtype=float)
        self.validate()

    def validate(self):
        if self.m_b <= 0:
            raise ValueError("m_b must be positive")
        if self.m_l < 0:
            raise ValueError("m_l must be nonnegative")
        if self.I_b.shape != (3, 3) or not np.allclose(self.I_b, self.I_b.T):
            raise ValueError("I_b must be a symmetric 3x3 matrix")
        if np.min(np.linalg.eigvalsh(self.I_b)) <= 0:
            raise ValueError("I_b must be positive definite")
        if self.hip_offsets.shape != (4, 3):
            raise ValueError("hip_offsets must be 4x3")
        if abs(float(np.sum(self.spin_dirs))) > 1e-12:
            raise ValueError("spin_dirs must sum to zero")

    @property
    def m_net(self):
        """Total vehicle mass [kg]."""
        return self.m_b + 4.0 * self.m_l

    @property
    def hover_thrust(self):
        """Per-rotor thrust balancing gravity [N]."""
        return self.m_net * self.g / 4.0

    def leg_tip_offsets(self, q_a):
        """Leg tip (thruster) positions relative to each hip, body frame, 4x3."""
        q_a = np.asarray(q_a, dtype=float)
        return np.column_stack([
            LEG_SIGN_X * self.L_leg * np.sin(q_a),
            LEG_SIGN_Y * self.lat_offset,
            -self.L_leg * np.cos(q_a),
        ])

    def rom_inertia(self):
        """Effective rotational inertia used by the ROM [kg m^2].

        Body inertia augmented by the four lumped leg masses placed at the
        leg centroids of the nominal posture (constant by construction: the
        ROM deliberately ignores posture-induced inertia variation).
        """
        cached = getattr(self, "_rom_inertia", None)
        if cached is not None:
            return cached
        q_nom = np.full(4, self.q_nominal)
        pts = self.hip_offsets + self.leg_com_fraction * self.leg_tip_offsets(q_nom)
        I = self.I_b.copy()
        for r in pts:
            I += self.m_l * (np.dot(r, r) * np.eye(3) - np.outer(r, r))
        self._rom_inertia = I  # params are treated as immutable after construction
        return I

    def copy(self, **changes):
        return replace(self, **changes)


def _default_leg_fractions():
    return np.array([0.3, 0.6, 1.0])


@dataclass
class HfParams(RobotParams):
    """High-fidelity plant parameters.

    Each leg carries three point masses placed at ``leg_fractions`` of the
    hip-to-tip segment; ``leg_point_masses`` must sum to ``m_l`` so both
    models agree on total mass.  By default the mass splits evenly, putting
    the leg centroid at ``leg_com_fraction`` (consistent with the ROM's
    effective-inertia augmentation).
    """

    leg_fractions: np.ndarray = field(default_factory=_default_leg_fractions)
    leg_point_masses: np.ndarray = None

    def __post_init__(self):
        self.leg_fractions = np.asarray(self.leg_fractions, dtype=float)
        if self.leg_point_masses is None:
            n = len(self.leg_fractions)
            self.leg_point_masses = np.full(n, self.m_l / n)
        self.leg_point_masses = np.asarray(self.leg_point_masses, dtype=float)
        super().__post_init__()

    def validate(self):
        super().validate()
        if self.leg_fractions.shape != self.leg_point_masses.shape:
            raise ValueError("leg_fractions and leg_point_masses must match in length")
        if np.any(self.leg_fractions < 0) or np.any(self.leg_fractions > 1):
            raise ValueError("leg_fractions must lie in [0, 1]")
        if abs(float(np.sum(self.leg_point_masses)) - self.m_l) > 1e-9:
            raise ValueError("leg point masses must sum to m_l")
