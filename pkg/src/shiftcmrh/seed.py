"""Restarted single-system solvers: CMRH(m) and the GMRES(m) baseline.

Both share one driver and differ only in the basis builder. Inside a cycle
the least-squares residual ``|g_{j+1}|`` is tracked incrementally; when it
drops below the target the true residual ``r = B_{j+1} u`` is formed (no
extra product) and the cycle ends early only if that confirms convergence.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dense import GivensLSQ, hessenberg_lsq
from .errors import DimensionMismatch, SingularSystemError
from .hessenberg import BREAKDOWN_RTOL, Arnoldi, PivotedHessenberg
from .sparse import CostCounters, ShiftedOperator, SparseMatrix, field_dtype

__all__ = ["SolveReport", "SolverConfig", "cmrh", "gmres"]


@dataclass
class SolverConfig:
    """Stopping and restart parameters.

    ``restart`` is the cycle length m (the outer step cap for the nested
    solvers), ``tol`` the relative residual target ``||r||/||b||``,
    ``max_mvps`` the budget on all matrix-vector products. With
    ``explicit_residual`` the restart residual is recomputed as ``b - Ax``
    once per cycle at the price of one product.
    """

    restart: int = 40
    tol: float = 1e-8
    max_mvps: int = 6000
    breakdown_rtol: float = BREAKDOWN_RTOL
    explicit_residual: bool = False

    def __post_init__(self):
        if self.restart < 1:
            raise ValueError("restart length must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_mvps < self.restart:
            raise ValueError("max_mvps must be at least the restart length")


@dataclass
class SolveReport:
    x: np.ndarray
    converged: bool
    cycles: int
    counters: CostCounters
    residual_history: list = field(default_factory=list)
    history_mvps: list = field(default_factory=list)
    quasi_residuals: list = field(default_factory=list)
    status: str = "converged"

    @property
    def mvps(self) -> int:
        return self.counters.mvps


def check_system(A: SparseMatrix, b, x0=None):
    b = np.asarray(b)
    if b.ndim != 1 or b.shape[0] != A.n:
        raise DimensionMismatch(f"right-hand side of shape {b.shape} does not match n = {A.n}")
    if x0 is not None:
        x0 = np.asarray(x0)
        if x0.shape != b.shape:
            raise DimensionMismatch(f"initial guess of shape {x0.shape} does not match n = {A.n}")
    return b, x0


BUILDERS = {"cmrh": PivotedHessenberg, "gmres": Arnoldi}


def _restarted(method, A, b, x0, cfg, sigma, callback):
    b, x0 = check_system(A, b, x0)
    cfg = cfg or SolverConfig()
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0:
        raise ValueError("right-hand side must be nonzero")
    dtype = field_dtype(A, b, x0, sigma if sigma != 0 else None)
    counter = CostCounters()
    op = ShiftedOperator(A, sigma, counter)
    check = ShiftedOperator(A, sigma, counter, slot="residual_check_mvps")
    norm_est = op.norm_estimate()
    builder = BUILDERS[method]
    target = cfg.tol * bnorm

    x = np.zeros(A.n, dtype=dtype) if x0 is None else x0.astype(dtype, copy=True)
    if x0 is not None and np.any(x0):
        r = b - check(x)
    else:
        r = b.astype(dtype, copy=True)

    report = SolveReport(x=x, converged=False, cycles=0, counters=counter, status="max_mvps")
    rnorm = float(np.linalg.norm(r))
    if rnorm < target:
        report.converged, report.status = True, "converged"
        return report

    while counter.total_mvps < cfg.max_mvps:
        # the optional explicit residual must also fit in the budget
        steps = min(cfg.restart, cfg.max_mvps - counter.total_mvps - int(cfg.explicit_residual))
        if steps < 1:
            break
        basis = builder(op, r, steps, norm_estimate=norm_est, breakdown_rtol=cfg.breakdown_rtol,
                        dtype=dtype, counter=counter, matvec_flops=op.matvec_flops())
        lsq = GivensLSQ(basis.scale, steps, dtype=basis.H.dtype, counter=counter)
        quasi = []
        while not basis.exhausted:
            basis.step()
            qres = lsq.append_column(basis.H[: basis.m + 1, basis.m - 1])
            quasi.append(qres)
            if qres < target and not basis.exhausted:
                y, u = hessenberg_lsq(basis.Hbar, basis.scale)
                if np.linalg.norm(basis.columns(basis.m + 1) @ u) < target:
                    break
        k = basis.m
        try:
            y, u = hessenberg_lsq(basis.Hbar, basis.scale, counter)
        except SingularSystemError:
            report.status = "singular"
            break
        x += basis.columns(k) @ y
        r = basis.columns(k + 1) @ u
        counter.update_flops += 2 * A.n * k + 2 * A.n * (k + 1)
        report.cycles += 1
        report.quasi_residuals.append(quasi)
        rnorm = float(np.linalg.norm(r))
        if cfg.explicit_residual or (basis.breakdown and rnorm >= target):
            r = b - check(x)
            rnorm = float(np.linalg.norm(r))
        report.residual_history.append(rnorm / bnorm)
        report.history_mvps.append(counter.total_mvps)
        if callback is not None:
            callback(report.cycles, x, r)
        if rnorm < target:
            report.converged, report.status = True, "converged"
            break
    return report


def cmrh(A: SparseMatrix, b, x0=None, cfg: SolverConfig | None = None, *, sigma=0.0,
         callback=None) -> SolveReport:
    """Restarted CMRH(m) for ``(A - sigma*I) x = b``.

    Each cycle builds a pivoted Hessenberg basis from the current residual,
    minimizes the quasi-residual ``||alpha*e1 - H y||`` and restarts from
    ``r = L_{m+1} u``. ``callback(cycle, x, r)`` is called after each cycle.
    """
    return _restarted("cmrh", A, b, x0, cfg, sigma, callback)


def gmres(A: SparseMatrix, b, x0=None, cfg: SolverConfig | None = None, *, sigma=0.0,
          callback=None) -> SolveReport:
    """Restarted GMRES(m) with modified Gram-Schmidt Arnoldi; same report as :func:`cmrh`."""
    return _restarted("gmres", A, b, x0, cfg, sigma, callback)
