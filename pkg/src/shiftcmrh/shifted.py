"""Solvers for a family of shifted systems ``(A - sigma_i I) x_i = b``.

One Krylov basis per restart cycle serves every shift. The seed system is
solved by minimizing its quasi-residual; each additional system picks the
update that keeps its residual collinear with the seed residual,
``r_i = gamma_i * r_seed``, which is what makes the next cycle's basis valid
for all shifts at once.

The fixed-step ``inner_shifted_*`` routines are the multi-shift inner
solvers used as flexible preconditioners by :mod:`shiftcmrh.nested`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dense import (
    GivensLSQ,
    hessenberg_lsq,
    shift_hessenberg,
    solve_bordered,
    solve_square_hessenberg_shifted,
)
from .errors import ResidualPolynomialVanishes, SingularSystemError
from .hessenberg import Arnoldi, PivotedHessenberg
from .seed import BUILDERS, SolverConfig, check_system
from .sparse import CostCounters, ShiftedOperator, SparseMatrix, field_dtype

__all__ = [
    "InnerSolve",
    "MultiShiftReport",
    "ShiftResult",
    "ShiftedProblem",
    "inner_shifted_fom",
    "inner_shifted_hessenberg",
    "shifted_cmrh",
    "shifted_gmres",
]


def _as_shift(s):
    s = complex(s)
    return s.real if s.imag == 0 else s


class ShiftedProblem:
    """Matrix, right-hand side and shift list, plus the seed choice.

    ``seed="zero"`` drives the iteration with ``A`` itself; an integer
    ``seed=k`` absorbs ``shifts[k]`` into the operator so the seed system is
    ``(A - shifts[k] I) x = b`` and the others are solved relative to it.
    ``seed="first"`` is shorthand for ``seed=0``.
    """

    def __init__(self, A: SparseMatrix, b, shifts, seed="first"):
        b, _ = check_system(A, b)
        shifts = [_as_shift(s) for s in shifts]
        if not shifts:
            raise ValueError("shift list must not be empty")
        if len(set(shifts)) != len(shifts):
            raise ValueError("shifts must be pairwise distinct")
        if seed == "first":
            seed = 0
        if seed != "zero":
            seed = int(seed)
            if not 0 <= seed < len(shifts):
                raise ValueError(f"seed index {seed} out of range")
        self.A = A
        self.b = b
        self.shifts = shifts
        self.seed = seed

    @property
    def seed_shift(self):
        return 0.0 if self.seed == "zero" else self.shifts[self.seed]

    @property
    def relative_shifts(self) -> list:
        s0 = self.seed_shift
        return [s if s0 == 0 else _as_shift(s - s0) for s in self.shifts]

    @property
    def seed_index(self):
        """Position of the seed system in the shift list, if it is there."""
        rel = self.relative_shifts
        return rel.index(0.0) if 0.0 in rel else None

    @property
    def dtype(self) -> np.dtype:
        return field_dtype(self.A, self.b, [s for s in self.shifts if s != 0])

    def seed_operator(self, counter=None, slot="mvps") -> ShiftedOperator:
        return ShiftedOperator(self.A, self.seed_shift, counter, slot)


@dataclass
class ShiftResult:
    shift: complex
    x: np.ndarray
    converged: bool = False
    status: str = "active"
    cycles: int = 0
    residual_history: list = field(default_factory=list)
    history_mvps: list = field(default_factory=list)
    gamma_history: list = field(default_factory=list)

    @property
    def active(self) -> bool:
        return self.status == "active"


@dataclass
class MultiShiftReport:
    """Outcome of a multi-shift solve.

    ``cycles`` counts restart cycles (outer steps for the nested solvers).
    Per-shift residual histories hold the values the solver itself used:
    ``|gamma_i| * ||r_seed|| / ||b||`` for the restarted methods and true
    residual norms for the nested ones.
    """

    results: list
    cycles: int
    counters: CostCounters
    seed_shift: complex = 0.0
    seed_residual_history: list = field(default_factory=list)
    seed_history_mvps: list = field(default_factory=list)
    peak_columns: int = 0
    spaces: object = None

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.results)

    @property
    def mvps(self) -> int:
        return self.counters.mvps

    @property
    def solutions(self) -> list:
        return [r.x for r in self.results]


def _restarted_shifted(method, problem: ShiftedProblem, cfg, callback, x0, gamma0):
    cfg = cfg or SolverConfig()
    A, b = problem.A, problem.b
    n = A.n
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0:
        raise ValueError("right-hand side must be nonzero")
    dtype = problem.dtype
    counter = CostCounters()
    op = problem.seed_operator(counter)
    check = problem.seed_operator(counter, "residual_check_mvps")
    norm_est = op.norm_estimate()
    builder = BUILDERS[method]
    target = cfg.tol * bnorm
    taus = problem.relative_shifts
    seed_idx = problem.seed_index
    t = len(taus)

    gamma = np.ones(t, dtype=np.result_type(dtype, np.float64))
    results = [ShiftResult(shift=s, x=np.zeros(n, dtype=dtype)) for s in problem.shifts]
    x_seed = np.zeros(n, dtype=dtype)
    r = b.astype(dtype, copy=True)
    if x0 is not None:
        # caller-supplied residual-collinear start: x0 = (x_seed, [x_i])
        x_seed = np.asarray(x0[0], dtype=dtype).copy()
        for res, xi in zip(results, x0[1]):
            res.x = np.asarray(xi, dtype=dtype).copy()
        gamma[:] = gamma0
        if np.any(x_seed):
            r = b - check(x_seed)
    adds = [i for i in range(t) if i != seed_idx]
    report = MultiShiftReport(results=results, cycles=0, counters=counter,
                              seed_shift=problem.seed_shift)

    def rel(i, rnorm):
        return rnorm / bnorm if i == seed_idx else abs(gamma[i]) * rnorm / bnorm

    rnorm = float(np.linalg.norm(r))
    for i in range(t):
        if rel(i, rnorm) < cfg.tol:
            results[i].converged, results[i].status = True, "converged"

    def all_done():
        return not any(res.active for res in results)

    while not all_done() and counter.total_mvps < cfg.max_mvps:
        # the optional explicit residual must also fit in the budget
        steps = min(cfg.restart, cfg.max_mvps - counter.total_mvps - int(cfg.explicit_residual))
        if steps < 1:
            break
        basis = builder(op, r, steps, norm_estimate=norm_est, breakdown_rtol=cfg.breakdown_rtol,
                        dtype=dtype, counter=counter, matvec_flops=op.matvec_flops())
        lsq = GivensLSQ(basis.scale, steps, dtype=basis.H.dtype, counter=counter)
        active_adds = [i for i in adds if results[i].active]
        weight = max([abs(gamma[i]) for i in active_adds]
                     + ([1.0] if seed_idx is not None and results[seed_idx].active else []))
        while not basis.exhausted:
            basis.step()
            qres = lsq.append_column(basis.H[: basis.m + 1, basis.m - 1])
            if qres * weight < target and not basis.exhausted:
                if _cycle_converges(basis, gamma, taus, active_adds, seed_idx, results, target):
                    break

        k = basis.m
        Hbar = basis.Hbar
        B = basis.columns(k)
        try:
            y, u = hessenberg_lsq(Hbar, basis.scale, counter)
        except SingularSystemError:
            for res in results:
                if res.active:
                    res.status = "singular"
            break
        x_seed += B @ y
        r = basis.columns(k + 1) @ u
        counter.update_flops += 2 * n * k + 2 * n * (k + 1)
        degenerate = basis.breakdown or not np.any(u)

        for i in active_adds:
            Hs = shift_hessenberg(Hbar, taus[i])
            rhs = gamma[i] * basis.scale
            if degenerate:
                # invariant subspace: every shifted system is solved exactly in it
                yi, _ = hessenberg_lsq(Hs, rhs, counter, "shift_lsq_flops")
                g_new = 0.0
            else:
                try:
                    yi, g_new = solve_bordered(Hs, u, rhs, counter)
                except ResidualPolynomialVanishes:
                    results[i].status = "singular"
                    continue
            results[i].x += B @ yi
            counter.update_flops += 2 * n * k
            gamma[i] = g_new

        report.cycles += 1
        rnorm = float(np.linalg.norm(r))
        if cfg.explicit_residual or (degenerate and rnorm >= target):
            r = b - check(x_seed)
            rnorm = float(np.linalg.norm(r))
        report.seed_residual_history.append(rnorm / bnorm)
        report.seed_history_mvps.append(counter.total_mvps)
        if seed_idx is not None and results[seed_idx].active:
            results[seed_idx].x = x_seed.copy()
        for i in range(t):
            res = results[i]
            if not res.active:
                continue
            res.residual_history.append(rel(i, rnorm))
            res.history_mvps.append(counter.total_mvps)
            res.gamma_history.append(complex(gamma[i]) if np.iscomplexobj(gamma) else float(gamma[i]))
            res.cycles = report.cycles
            if rel(i, rnorm) < cfg.tol:
                res.converged, res.status = True, "converged"
        if callback is not None:
            callback(report.cycles, x_seed, r, gamma.copy(), [res.x for res in results])

    if seed_idx is not None:
        results[seed_idx].x = x_seed
    for res in results:
        if res.status == "active":
            res.status = "max_mvps"
    report.peak_columns = (cfg.restart + 1) + t + 1
    return report


def _cycle_converges(basis, gamma, taus, active_adds, seed_idx, results, target) -> bool:
    """Would ending the cycle now leave every active system converged?"""
    try:
        _, u = hessenberg_lsq(basis.Hbar, basis.scale)
    except SingularSystemError:
        return False
    rnorm = float(np.linalg.norm(basis.columns(basis.m + 1) @ u))
    if seed_idx is not None and results[seed_idx].active and rnorm >= target:
        return False
    for i in active_adds:
        Hs = shift_hessenberg(basis.Hbar, taus[i])
        try:
            _, g = solve_bordered(Hs, u, gamma[i] * basis.scale)
        except ResidualPolynomialVanishes:
            return False
        if abs(g) * rnorm >= target:
            return False
    return True


def shifted_cmrh(problem: ShiftedProblem, cfg: SolverConfig | None = None, *, callback=None,
                 x0=None, gamma0=None) -> MultiShiftReport:
    """Restarted shifted CMRH(m).

    Starts from zero for every system (so all collinearity factors start at
    one) unless ``x0=(x_seed, [x_i, ...])`` and matching ``gamma0`` describe
    a residual-collinear start. Each cycle costs one pivoted Hessenberg
    build on the seed operator; every unconverged additional shift then
    solves its (m+1) x (m+1) bordered system. A shift is frozen once
    ``|gamma_i| ||r_seed|| / ||b|| < tol``. A shift whose bordered system is
    singular cannot stay collinear and is dropped with status ``"singular"``.

    ``callback(cycle, x_seed, r_seed, gamma, xs)`` runs after every cycle.
    """
    return _restarted_shifted("cmrh", problem, cfg, callback, x0, gamma0)


def shifted_gmres(problem: ShiftedProblem, cfg: SolverConfig | None = None, *, callback=None,
                  x0=None, gamma0=None) -> MultiShiftReport:
    """Restarted shifted GMRES(m); identical contract to :func:`shifted_cmrh`."""
    return _restarted_shifted("gmres", problem, cfg, callback, x0, gamma0)


@dataclass
class InnerSolve:
    """Result of a fixed-step multi-shift inner solve from ``v``.

    ``z[i]`` approximates ``(A - sigma_i I)^{-1} v`` and ``gamma[i]`` is the
    ratio of its residual to the zero-shift residual; both residuals lie
    along the last basis vector. ``z_seed`` is the zero-shift solution.
    Shifts whose shifted block was singular are listed in ``failed``.
    """

    z: list
    gamma: np.ndarray
    z_seed: np.ndarray
    beta: np.ndarray
    beta_seed: complex
    steps: int
    breakdown: bool
    failed: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    basis: object = None


def _inner(builder, A, sigma_list, v, steps, counter, norm_estimate, breakdown_rtol):
    if isinstance(A, SparseMatrix):
        A = ShiftedOperator(A, 0.0, counter, "inner_mvps")
    if steps < 1:
        raise ValueError("inner step count must be at least 1")
    basis = builder(A, v, steps, norm_estimate=norm_estimate, breakdown_rtol=breakdown_rtol,
                    counter=counter, matvec_flops=getattr(A, "matvec_flops", lambda: 0)())
    basis.run()
    k = basis.m
    Hbar = basis.Hbar
    B = basis.columns(k)
    y0, beta0 = solve_square_hessenberg_shifted(Hbar, 0.0, basis.scale, counter)
    z_seed = B @ y0
    t = len(sigma_list)
    z, beta = [], np.zeros(t, dtype=np.result_type(Hbar, np.float64, *sigma_list))
    gamma = np.ones(t, dtype=beta.dtype)
    failed, flags = [], []
    for i, sigma in enumerate(sigma_list):
        if sigma == 0:
            z.append(z_seed)
            beta[i] = beta0
            continue
        try:
            yi, beta[i] = solve_square_hessenberg_shifted(Hbar, sigma, basis.scale, counter)
        except SingularSystemError:
            failed.append(i)
            z.append(np.zeros_like(z_seed))
            gamma[i] = 0.0
            continue
        z.append(B @ yi)
        if basis.breakdown:
            # all inner residuals vanish; any gamma satisfies the collinearity relation
            gamma[i] = 1.0
        elif beta0 == 0:
            gamma[i] = 0.0
            flags.append(i)
        else:
            gamma[i] = beta[i] / beta0
            if gamma[i] == 0:
                flags.append(i)
    if counter is not None:
        counter.add("update_flops", 2 * A.n * k * (t + 1) if hasattr(A, "n") else 0)
    return InnerSolve(z=z, gamma=gamma, z_seed=z_seed, beta=beta, beta_seed=beta0, steps=k,
                      breakdown=basis.breakdown, failed=failed, flags=flags, basis=basis)


def inner_shifted_hessenberg(A, sigma_list, v, steps, *, counter: CostCounters | None = None,
                             norm_estimate=None, breakdown_rtol=1e-14) -> InnerSolve:
    """Fixed-step multi-shift Hessenberg solve (msHessen).

    Builds one pivoted Hessenberg basis of ``steps`` columns from ``v`` on the
    unshifted operator and solves ``(H_k - sigma_i I) y_i = alpha e1`` per
    shift. ``A`` is a :class:`SparseMatrix` (products are charged to
    ``counter.inner_mvps``) or any operator callback.
    """
    return _inner(PivotedHessenberg, A, sigma_list, v, steps, counter, norm_estimate, breakdown_rtol)


def inner_shifted_fom(A, sigma_list, v, steps, *, counter: CostCounters | None = None,
                      norm_estimate=None, breakdown_rtol=1e-14) -> InnerSolve:
    """Fixed-step multi-shift FOM (msFOM); same contract on the Arnoldi basis."""
    return _inner(Arnoldi, A, sigma_list, v, steps, counter, norm_estimate, breakdown_rtol)
