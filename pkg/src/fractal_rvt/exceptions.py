"""Exception and warning types raised across the package."""


class SingularLocusError(ValueError):
    """A defining function was evaluated where it is not differentiable."""


class SizeCapError(RuntimeError):
    """A construction or enumeration would exceed the configured resource cap."""


class DegenerateFitError(ValueError):
    """Too few usable scales to fit a log-log exponent."""


class DomainError(ValueError):
    """An input lies outside the range where the computation is meaningful."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class SaturationWarning(UserWarning):
    """A measurement was taken at or below the resolution of the discrete set."""


class OverflowGuardWarning(UserWarning):
    """A sequence was truncated by the overflow guard."""
