import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_sparse
from shiftcmrh import (
    CostCounters,
    DimensionMismatch,
    ShiftedOperator,
    SparseMatrix,
    apply_shifted,
    matvec,
)
from shiftcmrh.sparse import field_dtype


def test_identity_matvec():
    assert np.array_equal(matvec(SparseMatrix.identity(3), np.array([1.0, 2.0, 3.0])), [1, 2, 3])


def test_zero_vector_maps_to_zero():
    A = random_sparse(20, np.random.default_rng(0), density=0.3)
    assert not np.any(matvec(A, np.zeros(20)))


def test_diagonal_matvec():
    A = SparseMatrix.from_dense(np.diag([2.0, 3.0]))
    assert np.array_equal(matvec(A, np.ones(2)), [2.0, 3.0])


def test_apply_shifted_examples():
    A = SparseMatrix.from_dense(np.diag([2.0, 3.0]))
    assert np.array_equal(apply_shifted(A, -1.0, np.ones(2)), [3.0, 4.0])
    x = np.random.default_rng(1).standard_normal(5)
    assert not np.any(apply_shifted(SparseMatrix.identity(5), 1.0, x))


def test_zero_shift_is_bitwise_matvec():
    rng = np.random.default_rng(2)
    A = random_sparse(50, rng, density=0.2)
    x = rng.standard_normal(50)
    assert np.array_equal(apply_shifted(A, 0.0, x), matvec(A, x))


def test_counters_track_products():
    A = SparseMatrix.identity(4)
    c = CostCounters()
    matvec(A, np.ones(4), c)
    apply_shifted(A, 2.0, np.ones(4), c)
    apply_shifted(A, 2.0, np.ones(4), c, slot="inner_mvps")
    op = ShiftedOperator(A, 1.0, c, "residual_check_mvps")
    op(np.ones(4))
    assert (c.mvps, c.inner_mvps, c.residual_check_mvps) == (2, 1, 1)
    assert c.total_mvps == 4


def test_dimension_mismatch():
    A = SparseMatrix.identity(3)
    with pytest.raises(DimensionMismatch):
        matvec(A, np.ones(4))
    with pytest.raises(DimensionMismatch):
        apply_shifted(A, 1.0, np.ones((3, 1)))


def test_canonical_form():
    # duplicates summed, explicit zeros dropped, columns sorted
    A = SparseMatrix(3, [0, 3, 4, 5], [2, 0, 2, 1, 0], [1.0, 5.0, 2.0, 0.0, 7.0])
    assert A.nnz == 3
    assert list(A.row_extents) == [0, 2, 2, 3]
    assert list(A.col_indices) == [0, 2, 0]
    assert list(A.values) == [5.0, 3.0, 7.0]
    with pytest.raises(ValueError):
        A.values[0] = 1.0


def test_constructor_rejects_bad_storage():
    with pytest.raises(ValueError):
        SparseMatrix(2, [0, 2, 1], [0, 1], [1.0, 2.0])
    with pytest.raises(ValueError):
        SparseMatrix(2, [0, 1, 2], [0, 2], [1.0, 2.0])
    with pytest.raises(ValueError):
        SparseMatrix.from_scipy(sp.random(3, 4, density=0.5))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 30), seed=st.integers(0, 2**32 - 1), density=st.floats(0.0, 1.0))
def test_storage_invariants(n, seed, density):
    rng = np.random.default_rng(seed)
    A = random_sparse(n, rng, density=density)
    ext = A.row_extents
    assert ext[0] == 0 and ext[-1] == A.nnz and np.all(np.diff(ext) >= 0)
    for i in range(n):
        cols = A.col_indices[ext[i]:ext[i + 1]]
        assert np.all(np.diff(cols) > 0)
    assert np.all(A.values != 0)
    assert np.array_equal(A.toarray(), A.to_scipy().toarray())


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-10, 10), b=st.floats(-10, 10))
def test_matvec_linearity(seed, a, b):
    rng = np.random.default_rng(seed)
    A = random_sparse(25, rng, density=0.3)
    x, y = rng.standard_normal(25), rng.standard_normal(25)
    lhs = matvec(A, a * x + b * y)
    rhs = a * matvec(A, x) + b * matvec(A, y)
    scale = np.linalg.norm(A.toarray()) * (abs(a) * np.linalg.norm(x) + abs(b) * np.linalg.norm(y))
    assert np.linalg.norm(lhs - rhs) <= 1e-13 * max(scale, 1e-300)


def test_matvec_matches_dense_oracle():
    rng = np.random.default_rng(3)
    A = random_sparse(40, rng, density=0.2, complex_=True)
    x = rng.standard_normal(40) + 1j * rng.standard_normal(40)
    assert np.allclose(matvec(A, x), A.toarray() @ x, rtol=1e-14, atol=1e-14)


def test_complex_shift_promotes_field():
    A = SparseMatrix.from_dense(np.diag([2.0, 3.0]))
    y = apply_shifted(A, 1j, np.ones(2))
    assert np.iscomplexobj(y)
    assert np.allclose(y, [2 - 1j, 3 - 1j])
    assert field_dtype(A, np.ones(2)) == np.float64
    assert field_dtype(A, np.ones(2), 1j) == np.complex128


def test_frobenius_norm_of_shifted_operator():
    rng = np.random.default_rng(4)
    A = random_sparse(15, rng, density=0.3)
    for sigma in (0.0, -2.5, 1 + 2j):
        ref = np.linalg.norm(A.toarray() - sigma * np.eye(15))
        assert A.frobenius_norm(sigma) == pytest.approx(ref, rel=1e-13)


def test_negated_and_shifted():
    rng = np.random.default_rng(5)
    A = random_sparse(10, rng, density=0.4)
    assert np.array_equal(A.negated().toarray(), -A.toarray())
    assert np.allclose(A.shifted(0.5).toarray(), A.toarray() - 0.5 * np.eye(10))
    assert A == SparseMatrix.from_dense(A.toarray())
