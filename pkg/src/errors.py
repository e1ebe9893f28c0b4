"""Errors raised throughout the lab.

Two families exist. ``ValidationError`` covers inputs that are outside the domain or the exponent
regime of an operation; ``NumericalError`` covers computations that were attempted and failed.
The command line maps the first family to exit code 2 and the second to exit code 3.
"""
from typing import Optional


class Error(Exception):
    """Base class for exceptions."""


class ValidationError(Error):
    """Inputs rejected before any computation is attempted."""


class DomainError(ValidationError):
    """An argument lies outside the domain of the operation (e.g. a nonpositive radius)."""


class RegimeError(ValidationError):
    """The exponent p is outside the range where the requested object exists."""


class MeshError(ValidationError):
    """A radial mesh does not satisfy the requirements of the operation."""


class ConfigError(ValidationError):
    """A run configuration failed schema validation."""


class NumericalError(Error):
    """A numerical computation failed."""


class IntegrationError(NumericalError):
    """The ODE integrator failed; ``last_radius`` is the last point reached."""

    def __init__(self, message: str, last_radius: Optional[float] = None):
        super().__init__(message)
        self.last_radius = last_radius


class SearchError(NumericalError):
    """A bracketing search did not find a root within its search window."""


class ConditioningError(NumericalError):
    """The problem is too ill-conditioned for an accurate answer (e.g. near-separatrix orbits)."""


class StepError(NumericalError):
    """A time step violates the discrete maximum principle restriction."""


class BarrierError(NumericalError):
    """A barrier failed its continuity or kink-sign check at construction."""
