"""Exception types shared across the package."""


class SimulationError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(SimulationError):
    """Invalid user-supplied configuration (bad geometry, ranges, files)."""


class NumericalError(SimulationError):
    """An iterative method failed to reach its tolerance."""


class StructureError(SimulationError):
    """A state violated a structural assumption (X form, Bell diagonality)."""


class NoPeakError(NumericalError):
    """No entanglement peak was found inside the scanned time window."""

    def __init__(self, message: str, max_seen: float = 0.0):
        super().__init__(message)
        self.max_seen = max_seen


class UndistillableError(SimulationError):
    """Input pair is outside the distillable region."""
