"""Small dense kernels on (m+1) x m upper Hessenberg matrices.

Everything here is O(m^2) per call and runs in the field of its inputs.
Givens rotations use a real cosine and a (possibly complex) sine::

    [ c        s ] [a]   [rho]
    [-conj(s)  c ] [b] = [ 0 ]
"""
from __future__ import annotations

import math

import numpy as np

from .errors import ResidualPolynomialVanishes, SingularSystemError
from .sparse import CostCounters

__all__ = [
    "GivensLSQ",
    "givens",
    "hessenberg_lsq",
    "shift_hessenberg",
    "solve_bordered",
    "solve_square_hessenberg_shifted",
]

# pivots below this fraction of the matrix norm count as exact zeros
SINGULAR_RTOL = 64 * np.finfo(float).eps

ROTATION_FLOPS = 6


def givens(a, b):
    """Return ``(c, s, rho)`` zeroing ``b`` against ``a``."""
    if b == 0:
        return 1.0, 0.0, a
    if a == 0:
        return 0.0, 1.0, b
    abs_a = abs(a)
    r = math.hypot(abs_a, abs(b))
    phase = a / abs_a
    return abs_a / r, phase * np.conj(b) / r, phase * r


def _rotate(c, s, x, y):
    return c * x + s * y, -np.conj(s) * x + c * y


def _field(*arrays):
    return np.result_type(np.float64, *arrays)


def _charge(counter, slot, flops):
    if counter is not None:
        counter.add(slot, flops)


def _back_substitute(R, g, norm_ref, exc=SingularSystemError, msg="singular triangular factor"):
    k = R.shape[1]
    y = np.zeros(k, dtype=_field(R, g))
    tol = SINGULAR_RTOL * norm_ref
    for i in range(k - 1, -1, -1):
        piv = R[i, i]
        if piv == 0 or abs(piv) <= tol:
            raise exc(f"{msg} (pivot {i} = {abs(piv):.3e})")
        y[i] = (g[i] - R[i, i + 1:k] @ y[i + 1:]) / piv
    return y


class GivensLSQ:
    """Incremental QR of a growing (k+1) x k Hessenberg matrix.

    ``append_column`` takes the new Hessenberg column (k+2 leading entries)
    and returns the current least-squares residual norm ``|g_{k+1}|`` of
    ``min ||alpha*e1 - H_k y||``, which is what the solvers monitor between
    steps.
    """

    def __init__(self, alpha, m_max, dtype=None, counter: CostCounters | None = None,
                 slot: str = "seed_lsq_flops"):
        dtype = _field(np.asarray(alpha)) if dtype is None else np.dtype(dtype)
        self.R = np.zeros((m_max + 1, m_max), dtype=dtype)
        self.g = np.zeros(m_max + 1, dtype=dtype)
        self.g[0] = alpha
        self.rotations = []
        self.k = 0
        self.norm_ref = 0.0
        self.counter = counter
        self.slot = slot

    def _promote(self, col):
        if np.iscomplexobj(col) and not np.iscomplexobj(self.R):
            self.R = self.R.astype(np.complex128)
            self.g = self.g.astype(np.complex128)

    def append_column(self, h) -> float:
        k = self.k
        col = np.array(h[: k + 2], dtype=_field(h))
        self._promote(col)
        self.norm_ref = math.hypot(self.norm_ref, float(np.linalg.norm(col)))
        for i, (c, s) in enumerate(self.rotations):
            col[i], col[i + 1] = _rotate(c, s, col[i], col[i + 1])
        c, s, rho = givens(col[k], col[k + 1])
        self.rotations.append((c, s))
        col[k] = rho
        self.R[: k + 1, k] = col[: k + 1]
        self.g[k], self.g[k + 1] = _rotate(c, s, self.g[k], 0.0)
        self.k = k + 1
        _charge(self.counter, self.slot, ROTATION_FLOPS * (k + 2))
        return abs(self.g[k + 1])

    @property
    def residual_norm(self) -> float:
        return abs(self.g[self.k])

    def solve(self) -> np.ndarray:
        k = self.k
        _charge(self.counter, self.slot, k * k)
        return _back_substitute(self.R[:k, :k], self.g[:k], self.norm_ref)


def shift_hessenberg(H, sigma) -> np.ndarray:
    """``H - sigma * [I_m; 0]`` for an (m+1) x m Hessenberg matrix."""
    H = np.asarray(H)
    m = H.shape[1]
    out = np.array(H, dtype=np.result_type(H, np.float64, sigma), copy=True)
    out[np.arange(m), np.arange(m)] -= sigma
    return out


def hessenberg_lsq(H, alpha, counter: CostCounters | None = None, slot: str = "seed_lsq_flops"):
    """Solve ``min_y ||alpha*e1 - H y||_2`` by Givens rotations.

    Parameters
    ----------
    H : (p, m) array, p >= m + 1
        Upper Hessenberg; rows beyond ``m+1`` must be zero.
    alpha : scalar
        Scale of the first unit vector.

    Returns
    -------
    y : (m,) array
    u : (p,) array
        The least-squares residual ``alpha*e1 - H y``.
    """
    H = np.asarray(H)
    p, m = H.shape
    if p < m + 1:
        raise ValueError(f"expected at least {m + 1} rows, got {p}")
    if p > m + 1 and np.any(H[m + 1:] != 0):
        raise ValueError("rows below the first subdiagonal must be zero")
    lsq = GivensLSQ(alpha, m, dtype=_field(H, np.asarray(alpha)), counter=counter, slot=slot)
    for j in range(m):
        lsq.append_column(H[: j + 2, j])
    y = lsq.solve()
    u = -(H @ y)
    u[0] += alpha
    _charge(counter, slot, m * (m + 3))
    return y, u


def solve_bordered(H_sigma, u, rhs_scale, counter: CostCounters | None = None,
                   slot: str = "shift_lsq_flops"):
    """Solve ``[H_sigma | u] [y; gamma] = rhs_scale * e1``.

    The bordered matrix is square and upper Hessenberg apart from its last
    column. ``u`` is normalized before elimination so the singularity test
    does not depend on the size of the seed residual.

    Raises
    ------
    ResidualPolynomialVanishes
        If the bordered matrix is singular (this includes ``u = 0``).
    """
    H_sigma = np.asarray(H_sigma)
    u = np.asarray(u)
    m = H_sigma.shape[1]
    if H_sigma.shape != (m + 1, m) or u.shape != (m + 1,):
        raise ValueError("H_sigma must be (m+1) x m and u of length m+1")
    unorm = float(np.linalg.norm(u))
    if unorm == 0:
        raise ResidualPolynomialVanishes("residual polynomial vanishes at shift (zero residual column)")
    dtype = _field(H_sigma, u, np.asarray(rhs_scale))
    B = np.empty((m + 1, m + 1), dtype=dtype)
    B[:, :m] = H_sigma
    B[:, m] = u / unorm
    rhs = np.zeros(m + 1, dtype=dtype)
    rhs[0] = rhs_scale
    norm_ref = float(np.linalg.norm(B))
    for k in range(m):
        c, s, rho = givens(B[k, k], B[k + 1, k])
        B[k, k], B[k + 1, k] = rho, 0.0
        top, bot = B[k, k + 1:].copy(), B[k + 1, k + 1:].copy()
        B[k, k + 1:], B[k + 1, k + 1:] = _rotate(c, s, top, bot)
        rhs[k], rhs[k + 1] = _rotate(c, s, rhs[k], rhs[k + 1])
    _charge(counter, slot, ROTATION_FLOPS * (m * (m + 3) // 2) + (m + 1) ** 2)
    sol = _back_substitute(B, rhs, norm_ref, ResidualPolynomialVanishes,
                           "residual polynomial vanishes at shift")
    return sol[:m], sol[m] / unorm


def solve_square_hessenberg_shifted(H, sigma, alpha, counter: CostCounters | None = None,
                                    slot: str = "shift_lsq_flops"):
    """Solve ``(H[:m, :m] - sigma*I) y = alpha*e1``.

    Returns ``y`` and ``beta_last = -H[m, m-1] * y[m-1]``, the coefficient
    of the resulting residual along basis vector ``m+1``.
    """
    H = np.asarray(H)
    m = H.shape[1]
    if H.shape[0] != m + 1:
        raise ValueError("expected an (m+1) x m Hessenberg matrix")
    T = shift_hessenberg(H, sigma)[:m].astype(_field(H, np.asarray(sigma), np.asarray(alpha)))
    rhs = np.zeros(m, dtype=T.dtype)
    rhs[0] = alpha
    norm_ref = float(np.linalg.norm(T))
    for k in range(m - 1):
        c, s, rho = givens(T[k, k], T[k + 1, k])
        T[k, k], T[k + 1, k] = rho, 0.0
        top, bot = T[k, k + 1:].copy(), T[k + 1, k + 1:].copy()
        T[k, k + 1:], T[k + 1, k + 1:] = _rotate(c, s, top, bot)
        rhs[k], rhs[k + 1] = _rotate(c, s, rhs[k], rhs[k + 1])
    _charge(counter, slot, ROTATION_FLOPS * (m * (m + 1) // 2) + m * m)
    y = _back_substitute(T, rhs, norm_ref, SingularSystemError, "singular shifted Hessenberg block")
    return y, -H[m, m - 1] * y[m - 1]
