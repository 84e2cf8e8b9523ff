"""Exception types raised across the package."""

import numpy as np


class CascadeError(ValueError):
    """Base class for all errors raised by cascadetrees."""


class NotSquare(CascadeError):
    pass


class NotSymmetric(CascadeError):
    pass


class NotUnitDiagonal(CascadeError):
    pass


class NotPositiveDefinite(CascadeError, np.linalg.LinAlgError):
    """Cholesky factorization hit a non-positive pivot.

    ``pivot`` is the zero-based index of the first failing pivot, or None when
    the failure was detected some other way (e.g. a non-positive eigenvalue).
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class DimensionMismatch(CascadeError):
    pass


class InvalidCorrelation(CascadeError):
    pass


class CyclicEdges(CascadeError):
    pass


class InvalidCenter(CascadeError):
    pass


class ParseError(CascadeError):
    """Malformed matrix file; ``row`` and ``col`` are 1-based."""

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col
