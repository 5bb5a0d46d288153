"""Shared problem builders and dense oracles for the test suite."""
import numpy as np
import scipy.sparse as sp

from shiftcmrh import SparseMatrix


def random_sparse(n, rng, density=0.05, diag=0.0, complex_=False):
    """Random sparse matrix with a guaranteed nonzero diagonal shift ``diag``."""
    M = sp.random(n, n, density=density, random_state=rng, format="csr")
    if complex_:
        M = M + 1j * sp.random(n, n, density=density, random_state=rng, format="csr")
    M = M + diag * sp.identity(n, format="csr")
    return SparseMatrix.from_scipy(M)


def well_conditioned(n, rng, center=2.0, complex_=False):
    """Dense ``center*I + G/sqrt(n)``; eigenvalues lie near a disc around ``center``."""
    G = rng.standard_normal((n, n))
    if complex_:
        G = G + 1j * rng.standard_normal((n, n))
    return center * np.eye(n) + G / np.sqrt(n)


def shifted_solve(A, sigma, b):
    A = A.toarray() if isinstance(A, SparseMatrix) else np.asarray(A)
    return np.linalg.solve(A - sigma * np.eye(A.shape[0]), b)


def true_residual(A, sigma, b, x):
    A = A.toarray() if isinstance(A, SparseMatrix) else np.asarray(A)
    return b - (A @ x - sigma * x)


def rel_err(x, ref):
    return float(np.linalg.norm(x - ref) / np.linalg.norm(ref))
