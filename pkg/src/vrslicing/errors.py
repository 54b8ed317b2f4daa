"""Exception types raised by the slicing library."""


class SlicingError(ValueError):
    """Base class for domain errors."""


class InfeasibleError(SlicingError):
    """The slicing problem (or one of its constraints) has no solution."""


class ThresholdCeilingError(SlicingError):
    """A NOMA Link-1 threshold at or above the decodability ceiling beta1/beta2."""


class ConvergenceError(SlicingError):
    """A quadrature, root-finder or 1-D search failed to converge."""


class ConfigError(SlicingError):
    """Scenario configuration could not be parsed or validated."""
