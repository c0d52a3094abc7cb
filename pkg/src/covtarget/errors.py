"""Exception types shared across the package.

The CLI maps these to exit codes: usage problems exit 2, data errors exit 3,
estimation failures exit 4.
"""
from __future__ import annotations


class CovTargetError(Exception):
    """Base class for all errors raised by this package."""


class DataError(CovTargetError):
    """Invalid, inconsistent, or out-of-domain input data."""


class ParseError(DataError):
    """Malformed input file; message carries row/column context when known."""


class InsufficientDataError(DataError):
    """Too few observations for the requested operation."""


class DegenerateSeriesError(DataError):
    """A series has zero variance or is otherwise degenerate."""


class ShapeError(CovTargetError):
    """Array arguments have incompatible or invalid shapes."""


class NotPositiveDefiniteError(CovTargetError):
    """A matrix required to be positive definite is not.

    ``pivot`` is the zero-based index of the first failing Cholesky pivot
    when known, else None.
    """

    def __init__(self, message: str, pivot: int | None = None):
        super().__init__(message)
        self.pivot = pivot


class NumericalOverflowError(CovTargetError):
    """A filter recursion produced non-finite values.

    ``t`` is the zero-based time index of the first bad step when known.
    """

    def __init__(self, message: str, t: int | None = None):
        super().__init__(message)
        self.t = t


class EstimationError(CovTargetError):
    """Optimization failed to produce a usable estimate."""
