import numpy as np
import pytest

from helpers import rel_err, shifted_solve, true_residual, well_conditioned
from shiftcmrh import (
    Cdr3dSpec,
    PivotedHessenberg,
    ShiftedOperator,
    ShiftedProblem,
    SolverConfig,
    SparseMatrix,
    assemble_flexible_hessenberg,
    build_pivoted_hessenberg,
    generate_cdr3d,
    hessenberg_lsq,
    nested_solve,
    outer_basis_step,
)
from shiftcmrh.nested import NESTED_SOLVERS

DIAG = SparseMatrix.from_dense(np.diag([2.0, 3.0]))
PAIRS = [tuple(reversed(s.split("-"))) for s in NESTED_SOLVERS]  # (outer, inner)


def test_assemble_examples():
    H = np.array([[2.0], [1.0]])
    assert np.array_equal(assemble_flexible_hessenberg(H, np.ones(1)), H)
    assert assemble_flexible_hessenberg(H, np.array([2 / 3])) == pytest.approx(np.array([[5 / 3], [2 / 3]]))
    rng = np.random.default_rng(0)
    H = np.triu(rng.standard_normal((6, 5)), -1) * 1e-20
    assert np.array_equal(assemble_flexible_hessenberg(H, np.ones(5)), H)
    with pytest.raises(ValueError):
        assemble_flexible_hessenberg(H, np.ones(4))


def test_assemble_matches_formula():
    rng = np.random.default_rng(1)
    H = np.triu(rng.standard_normal((7, 6)), -1)
    g = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    Iu = np.eye(7, 6)
    assert np.allclose(assemble_flexible_hessenberg(H, g), (H - Iu) @ np.diag(g) + Iu, rtol=1e-15, atol=1e-15)


@pytest.mark.parametrize("outer, inner", PAIRS)
def test_diag_example_one_outer_step(outer, inner):
    rep = nested_solve(ShiftedProblem(DIAG, np.ones(2), [0.0, -1.0], seed="zero"), outer, inner, 2,
                       SolverConfig(restart=10, tol=1e-12))
    assert rep.converged and rep.cycles == 1
    for res in rep.results:
        assert res.residual_history[-1] < 1e-12


@pytest.mark.parametrize("outer, inner", PAIRS)
def test_exact_inner_limit(outer, inner):
    rng = np.random.default_rng(2)
    M = well_conditioned(30, rng, center=3.0)
    b = rng.standard_normal(30)
    shifts = [0.2, -0.5, 1.0 + 0.5j]
    rep = nested_solve(ShiftedProblem(SparseMatrix.from_dense(M), b, shifts), outer, inner, 30,
                       SolverConfig(restart=20, tol=1e-10))
    assert rep.converged and rep.cycles == 1
    for res in rep.results:
        assert rel_err(res.x, shifted_solve(M, res.shift, b)) < 1e-8


@pytest.mark.parametrize("outer, inner", PAIRS)
def test_single_zero_shift_has_unit_factors(outer, inner):
    rng = np.random.default_rng(3)
    M = well_conditioned(40, rng)
    rep = nested_solve(ShiftedProblem(SparseMatrix.from_dense(M), rng.standard_normal(40), [0.0]),
                       outer, inner, 4, SolverConfig(restart=15, tol=1e-10), keep_spaces=True)
    sp = rep.spaces
    assert np.all(np.asarray(sp.gamma[0]) == 1.0)
    k = len(sp.gamma[0])
    Hbar = sp.outer.H[: k + 1, :k]
    assert np.array_equal(assemble_flexible_hessenberg(Hbar, sp.gamma_diagonal(0)), Hbar)
    assert all(np.array_equal(a, b) for a, b in zip(sp.Z[0], sp.Z_seed))


@pytest.mark.parametrize("outer, inner", PAIRS)
def test_flexible_relations_every_step(outer, inner):
    rng = np.random.default_rng(4)
    n = 50
    M = well_conditioned(n, rng, center=1.0)
    b = rng.standard_normal(n)
    shifts = [-0.3, 0.4, 0.2j]
    rep = nested_solve(ShiftedProblem(SparseMatrix.from_dense(M), b, shifts, seed="zero"), outer, inner, 5,
                       SolverConfig(restart=12, tol=1e-14), keep_spaces=True)
    sp = rep.spaces
    L = sp.outer.basis
    normA = np.linalg.norm(M)
    Z0 = np.column_stack(sp.Z_seed)
    j = Z0.shape[1]
    assert np.linalg.norm(M @ Z0 - L[:, : j + 1] @ sp.outer.Hbar) <= 1e-11 * normA * np.linalg.norm(Z0)
    for i, s in enumerate(shifts):
        Z = sp.stack(i)
        for c in range(Z.shape[1]):
            g = sp.gamma[i][c]
            ident = M @ Z[:, c] - s * Z[:, c] - g * (M @ Z0[:, c]) + (g - 1) * L[:, c]
            assert np.linalg.norm(ident) <= 1e-10 * np.linalg.norm(L[:, c]) * normA
        k = Z.shape[1]
        Hs = assemble_flexible_hessenberg(sp.outer.H[: k + 1, :k], sp.gamma_diagonal(i))
        lhs = M @ Z - s * Z
        assert np.linalg.norm(lhs - L[:, : k + 1] @ Hs) <= 1e-10 * np.linalg.norm(lhs)


def test_fgmres_seed_residuals_non_increasing():
    rng = np.random.default_rng(5)
    M = well_conditioned(60, rng, center=1.2)
    rep = nested_solve(ShiftedProblem(SparseMatrix.from_dense(M), rng.standard_normal(60), [0.0, -0.3]),
                       "fgmres", "fom", 3, SolverConfig(restart=25, tol=1e-12))
    h = rep.results[0].residual_history
    assert all(b <= a * (1 + 1e-10) for a, b in zip(h, h[1:]))


def test_fcmrh_quasi_residuals_non_increasing():
    rng = np.random.default_rng(6)
    M = well_conditioned(60, rng, center=1.2)
    rep = nested_solve(ShiftedProblem(SparseMatrix.from_dense(M), rng.standard_normal(60), [0.0, -0.3]),
                       "fcmrh", "hessen", 3, SolverConfig(restart=25, tol=1e-12), keep_spaces=True)
    sp = rep.spaces
    quasi = [np.linalg.norm(hessenberg_lsq(sp.outer.H[: k + 1, :k], sp.outer.alpha)[1])
             for k in range(1, sp.outer.m + 1)]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(quasi, quasi[1:]))


@pytest.mark.parametrize("outer, inner", PAIRS)
def test_more_inner_steps_never_costs_more_outer_steps(outer, inner):
    A = generate_cdr3d(Cdr3dSpec(h=0.125, beta=(0.0, 10.0, 20.0), react=0.0), negate=True)
    b = np.ones(A.n)
    shifts = [0.0, -0.5, -1.0]
    steps = [nested_solve(ShiftedProblem(A, b, shifts), outer, inner, k, SolverConfig(restart=60)).cycles
             for k in (2, 4, 8, 16)]
    assert all(b <= a + 1 for a, b in zip(steps, steps[1:]))


def test_counters_and_memory_accounting():
    rng = np.random.default_rng(7)
    M = well_conditioned(40, rng, center=1.0)
    shifts = [0.1, -0.2, 0.3, -0.4]
    rep = nested_solve(ShiftedProblem(SparseMatrix.from_dense(M), rng.standard_normal(40), shifts),
                       "fcmrh", "hessen", 3, SolverConfig(restart=6, tol=1e-30))
    j = rep.cycles
    assert j == 6 and all(r.status == "max_outer" for r in rep.results)
    assert rep.counters.mvps == j
    assert rep.counters.inner_mvps == 3 * j
    assert rep.counters.residual_check_mvps == len(shifts) * j
    assert rep.peak_columns == (len(shifts) + 1) * j + (j + 1)


def test_true_residual_is_reported():
    rng = np.random.default_rng(8)
    M = well_conditioned(30, rng, center=2.0)
    b = rng.standard_normal(30)
    rep = nested_solve(ShiftedProblem(SparseMatrix.from_dense(M), b, [0.5, -0.5]), "fgmres", "hessen", 4,
                       SolverConfig(restart=20))
    for res in rep.results:
        r = true_residual(M, res.shift, b, res.x)
        assert res.residual_history[-1] == pytest.approx(np.linalg.norm(r) / np.linalg.norm(b), rel=1e-8)
        assert res.converged


def test_identity_preconditioned_outer_step_is_plain_step():
    rng = np.random.default_rng(9)
    A = SparseMatrix.from_dense(well_conditioned(25, rng))
    r0 = rng.standard_normal(25)
    plain = build_pivoted_hessenberg(ShiftedOperator(A), r0, 8)
    flex = PivotedHessenberg(ShiftedOperator(A), r0, 8)
    for _ in range(8):
        outer_basis_step(flex, flex.L[:, flex.m].copy())
    assert np.array_equal(plain.L, flex.L) and np.array_equal(flex.H, plain.H)
    assert np.array_equal(plain.q, flex.q)


def test_invalid_arguments():
    P = ShiftedProblem(DIAG, np.ones(2), [0.0])
    with pytest.raises(ValueError):
        nested_solve(P, "bicg", "hessen", 2)
    with pytest.raises(ValueError):
        nested_solve(P, "fcmrh", "cg", 2)
    with pytest.raises(ValueError):
        nested_solve(P, "fcmrh", "hessen", 0)
