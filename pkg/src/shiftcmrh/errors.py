"""Exception types raised by the solvers and the I/O layer."""

import numpy as np


class DimensionMismatch(ValueError):
    pass


class MatrixMarketError(ValueError):
    pass


class ZeroVectorError(ValueError):
    """Raised when a Krylov basis is requested from the zero vector."""


class SingularSystemError(np.linalg.LinAlgError):
    pass


class ResidualPolynomialVanishes(SingularSystemError):
    """The bordered collinearity system is singular for a shift.

    This happens exactly when the seed residual polynomial of the current
    cycle has a root at the shift, so no collinear update exists.
    """
