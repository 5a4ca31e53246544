"""Exception classes shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2,
numeric failures exit 3, verification failures exit 4.
"""
from __future__ import annotations


class ConfigError(ValueError):
    """Bad run configuration (unknown key, wrong type, inconsistent grids)."""


class NumericsError(RuntimeError):
    """Base class for numeric failures (branch tracking, quadrature, solvers)."""


class SingularInputError(NumericsError):
    """Evaluation requested too close to a pole of the generating function."""


class BranchTrackingError(NumericsError):
    """Analytic continuation of the nested square roots could not be resolved."""


class ConvergenceError(NumericsError):
    """An iterative solver or a long-time slope estimate did not converge."""


class IntegrationError(NumericsError):
    """Adaptive ODE integration failed (step-size underflow).

    Carries the last accepted state so callers can inspect how far the
    flow got before blowing up.
    """

    def __init__(self, message, last_state=None, last_time=None):
        super().__init__(message)
        self.last_state = last_state
        self.last_time = last_time


class QuadratureError(NumericsError):
    """An inversion integral failed a reality/normalization safeguard."""


class LongTimeAssumptionError(QuadratureError):
    """The non-decaying plateau of the work integrand carries too much weight
    for a clean long-time inversion (time horizon too short)."""


class GridError(ValueError):
    """An output grid is too small or too coarse for the requested operation."""


class ResourceLimitError(RuntimeError):
    """A requested matrix dimension exceeds the configured cap."""
