"""Exception hierarchy.

Input problems derive from ``ValueError`` so callers that already catch
``ValueError`` keep working; the CLI maps :class:`InputError` to exit code 2
and :class:`NumericError` to exit code 3.
"""


class GenrankError(Exception):
    """Base class for all package errors."""


class InputError(GenrankError, ValueError):
    """Malformed or inconsistent user input."""


class SizeError(InputError):
    """A requested size is incompatible with the available data."""


class NumericError(GenrankError, ArithmeticError):
    """A computation produced a non-finite or inconsistent value."""


class FitError(NumericError):
    """Too few usable points to fit a power law."""

    def __init__(self, message, n_points=0):
        super().__init__(message)
        self.n_points = n_points


class DegenerateDistributionError(NumericError):
    """The centered kernel spectrum is (numerically) zero.

    Raised when the closed-form quantile approximation is unavailable, which
    happens for point-mass distributions or kernels constant on the support.
    """
