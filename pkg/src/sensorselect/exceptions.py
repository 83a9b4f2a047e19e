"""Exception types raised across the package."""

import numpy as np


class RankDeficiencyError(np.linalg.LinAlgError):
    """Cholesky factorization failed because the matrix is not positive definite.

    Carries the 0-based index of the failing pivot in ``pivot``.
    """

    def __init__(self, message, pivot):
        super().__init__(message)
        self.pivot = pivot


class LineSearchError(RuntimeError):
    """Backtracking exhausted its halving budget without satisfying Armijo."""


class DampedSolveError(RuntimeError):
    """The subspace Newton system stayed indefinite through the damping ladder."""


class MatrixParseError(ValueError):
    """A matrix file could not be parsed; ``row`` and ``col`` are 1-based file positions."""

    def __init__(self, message, path=None, row=None, col=None):
        location = str(path) if path is not None else "<matrix>"
        if row is not None:
            location += f", line {row}"
        if col is not None:
            location += f", column {col}"
        super().__init__(f"{location}: {message}")
        self.path = path
        self.row = row
        self.col = col


class ConfigParseError(ValueError):
    """A config file line is not of the ``key = value`` form."""
