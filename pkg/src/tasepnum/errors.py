"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class TasepError(Exception):
    """Base class for library errors."""


class InvalidInput(TasepError, ValueError):
    """Malformed configuration, observation set or contour plan."""


class NumericalDomain(TasepError):
    """An integrand produced a non-finite value."""


class Degenerate(TasepError):
    """A kernel or determinant was evaluated at a singular point."""


class Unsupported(TasepError):
    """The request lies outside the regime this library handles."""


class ConditioningError(TasepError):
    """A linear fit or solve is too ill-conditioned to trust."""


class ConvergenceError(TasepError):
    """An iterative procedure did not reach its tolerance.

    ``best`` carries the last available value and ``error`` its estimate.
    """

    def __init__(self, message: str, best=None, error: float | None = None):
        super().__init__(message)
        self.best = best
        self.error = error


class NumericalQualityWarning(UserWarning):
    """Result is usable but a quality indicator exceeded its threshold."""
