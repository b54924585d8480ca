"""Exception types shared across the package."""


class BoundaryOverflowError(ValueError):
    """A point left the numerically safe part of the disk (|z| >= 1 - 1e-12)."""


class DegenerateChordError(ValueError):
    """Two coincident points where a geodesic or chord was required."""


class OrbitBudgetError(RuntimeError):
    """Orbit enumeration exceeded its element budget."""


class HorizonError(RuntimeError):
    """A finite-horizon estimate is not available at the requested scale."""


class ThresholdError(ValueError):
    """A speed parameter is below the threshold the constant ledger requires."""


class ConvergenceError(RuntimeError):
    """An iteration exhausted its budget without reaching its target."""


class ConfigError(ValueError):
    """Experiment configuration failed strict validation."""
