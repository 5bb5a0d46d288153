"""Hessenberg-process Krylov solvers for families of shifted linear systems.

The package solves ``(A - sigma_i I) x_i = b`` for many shifts at once with
restarted shifted CMRH (residuals kept collinear across restarts), a shifted
GMRES baseline, and nested flexible inner-outer solvers, all on top of a
small CSR matrix type with matrix-vector product accounting.
"""
from .errors import (
    DimensionMismatch,
    MatrixMarketError,
    ResidualPolynomialVanishes,
    SingularSystemError,
    ZeroVectorError,
)
from .hessenberg import (
    Arnoldi,
    PivotedHessenberg,
    basis_condition_number,
    build_arnoldi,
    build_pivoted_hessenberg,
)
from .dense import (
    GivensLSQ,
    givens,
    hessenberg_lsq,
    shift_hessenberg,
    solve_bordered,
    solve_square_hessenberg_shifted,
)
from .mmio import read_matrix_market, write_matrix_market
from .nested import NestedSearchSpaces, assemble_flexible_hessenberg, nested_solve, outer_basis_step
from .problems import Cdr3dSpec, generate_cdr3d, interior_points
from .seed import SolveReport, SolverConfig, cmrh, gmres
from .shifted import (
    InnerSolve,
    MultiShiftReport,
    ShiftedProblem,
    ShiftResult,
    inner_shifted_fom,
    inner_shifted_hessenberg,
    shifted_cmrh,
    shifted_gmres,
)
from .sparse import CostCounters, ShiftedOperator, SparseMatrix, apply_shifted, matvec

__version__ = "0.1.0"

__all__ = [
    "Arnoldi",
    "Cdr3dSpec",
    "CostCounters",
    "DimensionMismatch",
    "GivensLSQ",
    "InnerSolve",
    "MatrixMarketError",
    "MultiShiftReport",
    "NestedSearchSpaces",
    "PivotedHessenberg",
    "ResidualPolynomialVanishes",
    "ShiftResult",
    "ShiftedOperator",
    "ShiftedProblem",
    "SingularSystemError",
    "SolveReport",
    "SolverConfig",
    "SparseMatrix",
    "ZeroVectorError",
    "apply_shifted",
    "assemble_flexible_hessenberg",
    "basis_condition_number",
    "build_arnoldi",
    "build_pivoted_hessenberg",
    "cmrh",
    "generate_cdr3d",
    "givens",
    "gmres",
    "hessenberg_lsq",
    "inner_shifted_fom",
    "inner_shifted_hessenberg",
    "interior_points",
    "matvec",
    "nested_solve",
    "outer_basis_step",
    "read_matrix_market",
    "shift_hessenberg",
    "shifted_cmrh",
    "shifted_gmres",
    "solve_bordered",
    "solve_square_hessenberg_shifted",
    "write_matrix_market",
]
