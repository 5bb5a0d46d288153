"""Krylov basis builders driven by an operator callback.

:class:`PivotedHessenberg` is the Hessenberg process with infinity-norm
pivoting. It produces a basis ``L`` that is unit lower trapezoidal up to the
row permutation ``q`` and an upper Hessenberg ``H`` with
``A L[:, :m] = L[:, :m+1] H[:m+1, :m]``. :class:`Arnoldi` is the modified
Gram-Schmidt counterpart used by the GMRES/FOM baselines.

Both builders grow one column per :meth:`step`. A step normally applies the
operator to the newest basis vector; passing ``vector=`` applies it to
something else instead, which is how the flexible outer solvers extend their
basis with ``A z_j``.
"""
from __future__ import annotations

import numpy as np

from .errors import SingularSystemError, ZeroVectorError
from .sparse import CostCounters

__all__ = [
    "Arnoldi",
    "PivotedHessenberg",
    "basis_condition_number",
    "build_arnoldi",
    "build_pivoted_hessenberg",
]

BREAKDOWN_RTOL = 1e-14


class _KrylovBasis:
    """Storage and bookkeeping shared by both builders."""

    def __init__(self, apply, r0, m_max, norm_estimate=None, breakdown_rtol=BREAKDOWN_RTOL,
                 dtype=None, counter: CostCounters | None = None, matvec_flops: int = 0):
        r0 = np.asarray(r0)
        if r0.ndim != 1:
            raise ValueError("starting vector must be one-dimensional")
        if m_max < 1:
            raise ValueError("m_max must be at least 1")
        if not np.any(r0):
            raise ZeroVectorError("cannot build a Krylov basis from the zero vector")
        self.apply = apply
        self.n = r0.shape[0]
        self.m_max = int(m_max)
        self.norm_estimate = norm_estimate
        self.breakdown_rtol = breakdown_rtol
        self.counter = counter
        self.matvec_flops = matvec_flops
        dtype = np.result_type(np.float64, r0) if dtype is None else np.result_type(np.float64, dtype, r0)
        self.basis = np.zeros((self.n, self.m_max + 1), dtype=dtype, order="F")
        self.H = np.zeros((self.m_max + 1, self.m_max), dtype=dtype)
        self.m = 0
        self.breakdown = False

    @property
    def exhausted(self) -> bool:
        return self.breakdown or self.m >= self.m_max

    @property
    def Hbar(self) -> np.ndarray:
        """The (m+1) x m Hessenberg factor of the completed steps."""
        return self.H[: self.m + 1, : self.m]

    def columns(self, k: int) -> np.ndarray:
        return self.basis[:, :k]

    def _apply(self, w):
        u = np.array(self.apply(w), copy=True)
        if np.iscomplexobj(u) and not np.iscomplexobj(self.basis):
            self.basis = self.basis.astype(np.complex128, order="F")
            self.H = self.H.astype(np.complex128)
        return u.astype(self.basis.dtype, copy=False)

    def _threshold(self, w, u_initial, norm):
        if self.norm_estimate:
            return self.breakdown_rtol * self.norm_estimate * norm(w)
        return self.breakdown_rtol * norm(u_initial)

    def _charge(self, flops):
        if self.counter is not None:
            self.counter.add("basis_flops", flops)

    def _check_step(self):
        if self.exhausted:
            raise RuntimeError("basis is complete; no further steps possible")

    def run(self):
        while not self.exhausted:
            self.step()
        return self


class PivotedHessenberg(_KrylovBasis):
    """Hessenberg process with pivoting.

    Attributes
    ----------
    L : (n, m_max+1) array
        Basis columns; only the first ``m+1`` are meaningful (``m`` after
        a breakdown).
    q : (n,) int array
        Pivot permutation; ``L[q[k], j] == 0`` for ``k < j`` and
        ``L[q[j], j] == 1``.
    alpha : scalar
        The entry of ``r0`` with largest modulus, ``l_1 = r0 / alpha``.
    """

    def __init__(self, apply, r0, m_max, **kwargs):
        super().__init__(apply, r0, m_max, **kwargs)
        r0 = np.asarray(r0)
        j0 = int(np.argmax(np.abs(r0)))
        self.q = np.arange(self.n)
        self.alpha = r0[j0]
        l1 = r0 / self.alpha
        l1[j0] = 1.0
        self.basis[:, 0] = l1
        self.q[[0, j0]] = self.q[[j0, 0]]

    @property
    def L(self) -> np.ndarray:
        return self.basis

    @property
    def scale(self):
        return self.alpha

    def step(self, vector=None) -> bool:
        """Perform one step; returns ``False`` once the process broke down."""
        self._check_step()
        j = self.m
        w = self.basis[:, j] if vector is None else np.asarray(vector)
        u = self._apply(w)
        L, H, q = self.basis, self.H, self.q
        u_initial = u.copy() if not self.norm_estimate else None
        for k in range(j + 1):
            h = u[q[k]]
            H[k, j] = h
            if h != 0:
                u -= h * L[:, k]
            u[q[k]] = 0.0
        self._charge(self.matvec_flops + 2 * self.n * (j + 1))

        rest = q[j + 1:]
        if rest.size:
            mags = np.abs(u[rest])
            i0 = int(np.argmax(mags))
            biggest = mags[i0]
        else:
            biggest = 0.0
        if j + 1 < self.n and biggest > self._threshold(w, u_initial, _inf_norm):
            p = j + 1 + i0
            piv = u[q[p]]
            H[j + 1, j] = piv
            l = u / piv
            l[q[: j + 1]] = 0.0
            l[q[p]] = 1.0
            L[:, j + 1] = l
            q[[j + 1, p]] = q[[p, j + 1]]
            self._charge(self.n)
        else:
            H[j + 1, j] = 0.0
            self.breakdown = True
        self.m = j + 1
        return not self.breakdown


class Arnoldi(_KrylovBasis):
    """Arnoldi process with modified Gram-Schmidt; ``V`` is orthonormal."""

    def __init__(self, apply, r0, m_max, **kwargs):
        super().__init__(apply, r0, m_max, **kwargs)
        r0 = np.asarray(r0)
        self.beta = float(np.linalg.norm(r0))
        self.basis[:, 0] = r0 / self.beta

    @property
    def V(self) -> np.ndarray:
        return self.basis

    @property
    def scale(self):
        return self.beta

    def step(self, vector=None) -> bool:
        self._check_step()
        j = self.m
        w = self.basis[:, j] if vector is None else np.asarray(vector)
        u = self._apply(w)
        V, H = self.basis, self.H
        u_initial = u.copy() if not self.norm_estimate else None
        for k in range(j + 1):
            h = np.vdot(V[:, k], u)
            H[k, j] = h
            u -= h * V[:, k]
        self._charge(self.matvec_flops + 4 * self.n * (j + 1))
        hn = float(np.linalg.norm(u))
        if j + 1 < self.n and hn > self._threshold(w, u_initial, np.linalg.norm):
            H[j + 1, j] = hn
            V[:, j + 1] = u / hn
            self._charge(3 * self.n)
        else:
            H[j + 1, j] = 0.0
            self.breakdown = True
        self.m = j + 1
        return not self.breakdown


def _inf_norm(v) -> float:
    return float(np.max(np.abs(v))) if np.size(v) else 0.0


def build_pivoted_hessenberg(apply, r0, m_max, **kwargs) -> PivotedHessenberg:
    """Run up to ``m_max`` steps of the pivoted Hessenberg process from ``r0``.

    Keyword arguments are forwarded to :class:`PivotedHessenberg`; the most
    useful is ``norm_estimate`` (e.g. the Frobenius norm of the operator),
    which sets the breakdown threshold
    ``||u||_inf <= breakdown_rtol * norm_estimate * ||l_j||_inf``.
    """
    return PivotedHessenberg(apply, r0, m_max, **kwargs).run()


def build_arnoldi(apply, r0, m_max, **kwargs) -> Arnoldi:
    return Arnoldi(apply, r0, m_max, **kwargs).run()


def basis_condition_number(L) -> float:
    """2-norm condition number of a tall basis slab, via its singular values."""
    L = np.asarray(L)
    if L.ndim != 2 or L.shape[1] == 0:
        raise ValueError("expected a non-empty two-dimensional slab")
    s = np.linalg.svd(L, compute_uv=False)
    if s[-1] <= max(L.shape) * np.finfo(float).eps * s[0]:
        raise SingularSystemError("basis slab is numerically rank deficient")
    return float(s[0] / s[-1])
