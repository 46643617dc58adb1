"""Shared exception types."""


class GimbalLockError(ValueError):
    """Pitch too close to +/-90 deg for Euler-rate kinematics."""


class NonFiniteError(ArithmeticError):
    """A dynamics or integration stage produced NaN/Inf."""


class SingularConfigurationError(ValueError):
    """Mass matrix body block is numerically singular."""


class ConfigError(ValueError):
    """Bad configuration file; message names the offending key path."""


class SimulationCrash(RuntimeError):
    """Closed-loop run aborted (non-finite state or ground impact)."""

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log
