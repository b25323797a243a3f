"""Typed exceptions shared across heatlab modules.

Callers are expected to branch on the regime errors (divergent moments,
alpha-perimeter outside (0,1)) rather than on sentinel values.
"""


class HeatlabError(Exception):
    """Base class for all heatlab-specific errors."""


class RegimeError(HeatlabError, ValueError):
    """An operation was requested outside the parameter regime where the
    underlying quantity is defined or finite."""


class DivergentMomentError(RegimeError):
    """The d-th radial moment of the kernel diverges (alpha <= 1 or the
    polynomial family, whose moment integrand decays like 1/r)."""


class QuadratureError(HeatlabError, RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Carries the best residual estimate so callers can report it.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class UnsupportedShapeError(HeatlabError, TypeError):
    """The requested operation has no evaluation path for this shape variant."""


class SamplingEfficiencyError(HeatlabError, RuntimeError):
    """Monte Carlo rejection efficiency fell below the usable threshold
    (pathological bounding box)."""
