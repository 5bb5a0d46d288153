"""Nested inner-outer solvers for shifted systems.

The outer loop is a flexible CMRH (pivoted Hessenberg) or flexible GMRES
(Arnoldi) iteration on the seed operator. Each outer step preconditions the
newest basis vector with a fixed-step multi-shift inner solve, which returns
one search direction per shift together with the factor ``gamma`` relating
that shift's inner residual to the seed's. The outer basis grows with
``A z_seed`` only; every shift then solves its own small least-squares
problem with the modified Hessenberg matrix ``(H - I)Gamma + I``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dense import hessenberg_lsq
from .errors import SingularSystemError
from .hessenberg import Arnoldi, PivotedHessenberg
from .seed import SolverConfig
from .shifted import (
    MultiShiftReport,
    ShiftedProblem,
    ShiftResult,
    inner_shifted_fom,
    inner_shifted_hessenberg,
)
from .sparse import CostCounters, ShiftedOperator

__all__ = [
    "NESTED_SOLVERS",
    "NestedSearchSpaces",
    "assemble_flexible_hessenberg",
    "nested_solve",
    "outer_basis_step",
]

OUTER = {"fcmrh": PivotedHessenberg, "fgmres": Arnoldi}
INNER = {"hessen": inner_shifted_hessenberg, "fom": inner_shifted_fom}
NESTED_SOLVERS = ("hessen-fcmrh", "hessen-fgmres", "fom-fcmrh", "fom-fgmres")


def assemble_flexible_hessenberg(H, gamma) -> np.ndarray:
    """Return ``(H - [I; 0]) diag(gamma) + [I; 0]`` for an (m+1) x m ``H``.

    Columns with ``gamma == 1`` are copied unchanged, so a shift whose
    factors are all one gets ``H`` back bit for bit.

    >>> assemble_flexible_hessenberg([[2.0], [1.0]], [2 / 3])
    array([[1.66666667],
           [0.66666667]])
    """
    H = np.asarray(H)
    gamma = np.asarray(gamma)
    m = H.shape[1]
    if H.shape[0] != m + 1 or gamma.shape != (m,):
        raise ValueError("expected an (m+1) x m matrix and m collinearity factors")
    out = np.array(H, dtype=np.result_type(H, gamma, np.float64), copy=True)
    for j in np.flatnonzero(gamma != 1):
        g = gamma[j]
        out[:, j] = H[:, j] * g
        out[j, j] = (H[j, j] - 1.0) * g + 1.0
    return out


def outer_basis_step(basis, z_seed):
    """Extend a flexible outer basis with ``A z_seed``.

    ``basis`` is a :class:`PivotedHessenberg` or :class:`Arnoldi` builder;
    the pivoting and orthogonalization rules are those of a plain step.
    """
    basis.step(vector=z_seed)
    return basis


@dataclass
class NestedSearchSpaces:
    """Per-shift flexible search directions and their collinearity factors.

    ``Z[i][j]`` and ``gamma[i][j]`` come from the inner solve started at
    outer basis vector ``j``; ``Z_seed[j]`` is the zero-shift direction that
    extended the outer basis.
    """

    Z: list
    gamma: list
    Z_seed: list = field(default_factory=list)
    flagged: list = field(default_factory=list)
    outer: object = None

    def stack(self, i) -> np.ndarray:
        return np.column_stack(self.Z[i])

    def gamma_diagonal(self, i) -> np.ndarray:
        return np.asarray(self.gamma[i])

    @property
    def stored_columns(self) -> int:
        return sum(len(z) for z in self.Z) + len(self.Z_seed)


def nested_solve(problem: ShiftedProblem, outer: str = "fcmrh", inner: str = "hessen",
                 it_in: int = 10, cfg: SolverConfig | None = None, *,
                 keep_spaces: bool = False) -> MultiShiftReport:
    """Flexible outer solver with a multi-shift inner preconditioner.

    Runs at most ``cfg.restart`` outer steps from ``x = 0`` without restart.
    After every outer step each active shift solves its least-squares problem
    and checks its true residual ``b - (A - sigma_i I) x_i``; those products
    are charged to ``counters.residual_check_mvps``. A shift is frozen once
    its relative true residual drops below ``cfg.tol``. A shift whose
    shifted inner block is singular is dropped with status ``"failed"``.

    With ``keep_spaces=True`` the report's ``spaces`` attribute holds the
    :class:`NestedSearchSpaces` and the outer basis for inspection.
    """
    if outer not in OUTER:
        raise ValueError(f"unknown outer solver {outer!r}")
    if inner not in INNER:
        raise ValueError(f"unknown inner solver {inner!r}")
    if it_in < 1:
        raise ValueError("it_in must be at least 1")
    cfg = cfg or SolverConfig()
    A, b = problem.A, problem.b
    n = A.n
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0:
        raise ValueError("right-hand side must be nonzero")
    dtype = problem.dtype
    counter = CostCounters()
    op = problem.seed_operator(counter)
    op_inner = problem.seed_operator(counter, "inner_mvps")
    norm_est = op.norm_estimate()
    taus = problem.relative_shifts
    t = len(taus)
    checks = [ShiftedOperator(A, s, counter, "residual_check_mvps") for s in problem.shifts]

    basis = OUTER[outer](op, b.astype(dtype), min(cfg.restart, n), norm_estimate=norm_est,
                         breakdown_rtol=cfg.breakdown_rtol, dtype=dtype, counter=counter,
                         matvec_flops=op.matvec_flops())
    inner_fn = INNER[inner]
    spaces = NestedSearchSpaces(Z=[[] for _ in range(t)], gamma=[[] for _ in range(t)], outer=basis)
    results = [ShiftResult(shift=s, x=np.zeros(n, dtype=dtype)) for s in problem.shifts]
    report = MultiShiftReport(results=results, cycles=0, counters=counter,
                              seed_shift=problem.seed_shift)
    peak = 1

    while not basis.exhausted and any(res.active for res in results):
        j = basis.m
        active = [i for i in range(t) if results[i].active]
        try:
            sol = inner_fn(op_inner, [taus[i] for i in active], basis.basis[:, j], it_in,
                           counter=counter, norm_estimate=norm_est,
                           breakdown_rtol=cfg.breakdown_rtol)
        except SingularSystemError:
            for i in active:
                results[i].status = "failed"
            break
        spaces.Z_seed.append(sol.z_seed)
        outer_basis_step(basis, sol.z_seed)
        report.cycles += 1
        Hbar = basis.Hbar

        for pos, i in enumerate(active):
            res = results[i]
            if pos in sol.failed:
                res.status = "failed"
                continue
            if pos in sol.flags:
                spaces.flagged.append((i, j))
            spaces.Z[i].append(sol.z[pos])
            spaces.gamma[i].append(sol.gamma[pos])
            Hs = assemble_flexible_hessenberg(Hbar, np.asarray(spaces.gamma[i]))
            try:
                y, _ = hessenberg_lsq(Hs, basis.scale, counter, "shift_lsq_flops")
            except SingularSystemError:
                # rank-deficient flexible factor: keep the previous iterate
                y = None
            if y is not None:
                res.x = spaces.stack(i) @ y
                counter.update_flops += 2 * n * len(y)
            rel = float(np.linalg.norm(b - checks[i](res.x))) / bnorm
            res.residual_history.append(rel)
            res.history_mvps.append(counter.total_mvps)
            res.gamma_history.append(sol.gamma[pos])
            res.cycles = report.cycles
            if rel < cfg.tol:
                res.converged, res.status = True, "converged"
        peak = max(peak, spaces.stored_columns + basis.m + 1)

    for res in results:
        if res.status == "active":
            res.status = "max_outer"
    report.peak_columns = peak
    if keep_spaces:
        report.spaces = spaces
    return report
