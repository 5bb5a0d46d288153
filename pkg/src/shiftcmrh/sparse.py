"""Sparse matrix storage, matrix-vector kernels and cost counters.

Matrices are kept in canonical compressed-row form (sorted column indices,
duplicates summed, no stored zeros). The product itself is delegated to
``scipy.sparse``, whose CSR kernel accumulates each row left to right.
"""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch

__all__ = [
    "CostCounters",
    "SparseMatrix",
    "ShiftedOperator",
    "apply_shifted",
    "field_dtype",
    "matvec",
]


def field_dtype(*objs) -> np.dtype:
    """Common field of the arguments: float64 or complex128.

    Accepts arrays, scalars and :class:`SparseMatrix`; ``None`` is ignored.
    A complex scalar with zero imaginary part still promotes to complex, so
    callers that want real arithmetic should pass real shifts.
    """
    complex_ = False
    for obj in objs:
        if obj is None:
            continue
        if isinstance(obj, SparseMatrix):
            complex_ |= obj.is_complex
        elif isinstance(obj, (list, tuple)):
            complex_ |= field_dtype(*obj) == np.complex128
        else:
            complex_ |= np.iscomplexobj(obj)
    return np.dtype(np.complex128 if complex_ else np.float64)


@dataclass
class CostCounters:
    """Work counters of one solve.

    ``mvps`` counts products spent building the (outer) Krylov basis,
    ``inner_mvps`` those of inner solvers, and ``residual_check_mvps``
    the explicit residual evaluations. The ``*_flops`` fields follow the
    four cost classes of a generic restart cycle: basis construction, the
    seed least-squares solve, vector updates of the iterates and the small
    solves for the additional shifts.
    """

    mvps: int = 0
    inner_mvps: int = 0
    residual_check_mvps: int = 0
    basis_flops: int = 0
    seed_lsq_flops: int = 0
    update_flops: int = 0
    shift_lsq_flops: int = 0

    @property
    def total_mvps(self) -> int:
        return self.mvps + self.inner_mvps + self.residual_check_mvps

    def add(self, slot: str, amount: int) -> None:
        setattr(self, slot, getattr(self, slot) + int(amount))

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class SparseMatrix:
    """Square sparse matrix in canonical compressed-row form.

    Parameters
    ----------
    n : int
        Dimension.
    row_extents : array_like of int, length n + 1
        Row pointer; row ``k`` owns ``values[row_extents[k]:row_extents[k+1]]``.
    col_indices : array_like of int
        Column ids, 0-based.
    values : array_like
        Real or complex entries.

    The constructor canonicalizes its input, so it is safe to pass rows with
    unsorted or repeated columns. Instances are read-only.
    """

    def __init__(self, n, row_extents, col_indices, values):
        n = int(n)
        if n < 1:
            raise ValueError("matrix dimension must be positive")
        row_extents = np.asarray(row_extents, dtype=np.int64)
        col_indices = np.asarray(col_indices, dtype=np.int64)
        values = np.asarray(values)
        if row_extents.shape != (n + 1,):
            raise ValueError("row_extents must have n + 1 entries")
        if row_extents[0] != 0 or np.any(np.diff(row_extents) < 0):
            raise ValueError("row_extents must start at 0 and be non-decreasing")
        if row_extents[-1] != col_indices.size or col_indices.size != values.size:
            raise ValueError("row_extents[-1] must equal the number of entries")
        if col_indices.size and (col_indices.min() < 0 or col_indices.max() >= n):
            raise ValueError("column index out of range")
        dtype = np.complex128 if np.iscomplexobj(values) else np.float64
        csr = sp.csr_matrix((values.astype(dtype), col_indices, row_extents), shape=(n, n))
        self._init_from_csr(csr)

    def _init_from_csr(self, csr):
        csr = sp.csr_matrix(csr, copy=True)
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        if csr.dtype not in (np.float64, np.complex128):
            csr = csr.astype(np.complex128 if np.iscomplexobj(csr.data) else np.float64)
        for arr in (csr.data, csr.indices, csr.indptr):
            arr.flags.writeable = False
        self._csr = csr
        self.n = csr.shape[0]

    @classmethod
    def from_scipy(cls, mat) -> "SparseMatrix":
        mat = sp.csr_matrix(mat)
        if mat.shape[0] != mat.shape[1]:
            raise ValueError(f"matrix must be square, got shape {mat.shape}")
        obj = cls.__new__(cls)
        obj._init_from_csr(mat)
        return obj

    @classmethod
    def from_dense(cls, a) -> "SparseMatrix":
        return cls.from_scipy(sp.csr_matrix(np.asarray(a)))

    @classmethod
    def from_coo(cls, n, rows, cols, values) -> "SparseMatrix":
        """Build from triplets; repeated (row, col) pairs are summed."""
        values = np.asarray(values)
        dtype = np.complex128 if np.iscomplexobj(values) else np.float64
        coo = sp.coo_matrix((values.astype(dtype), (rows, cols)), shape=(n, n))
        return cls.from_scipy(coo.tocsr())

    @classmethod
    def identity(cls, n, dtype=np.float64) -> "SparseMatrix":
        return cls.from_scipy(sp.identity(n, dtype=dtype, format="csr"))

    @property
    def row_extents(self) -> np.ndarray:
        return self._csr.indptr

    @property
    def col_indices(self) -> np.ndarray:
        return self._csr.indices

    @property
    def values(self) -> np.ndarray:
        return self._csr.data

    @property
    def nnz(self) -> int:
        return int(self._csr.nnz)

    @property
    def dtype(self) -> np.dtype:
        return self._csr.dtype

    @property
    def is_complex(self) -> bool:
        return self._csr.dtype == np.complex128

    @property
    def shape(self):
        return (self.n, self.n)

    def to_scipy(self):
        """A copy as ``scipy.sparse.csr_matrix``."""
        return self._csr.copy()

    def toarray(self) -> np.ndarray:
        return self._csr.toarray()

    def diagonal(self) -> np.ndarray:
        return self._csr.diagonal()

    def frobenius_norm(self, sigma=0.0) -> float:
        """Frobenius norm of ``A - sigma*I`` without forming it."""
        fro2 = float(np.sum(np.abs(self.values) ** 2))
        if sigma != 0:
            d = self.diagonal()
            fro2 += float(np.sum(np.abs(d - sigma) ** 2 - np.abs(d) ** 2))
        return float(np.sqrt(max(fro2, 0.0)))

    def negated(self) -> "SparseMatrix":
        return SparseMatrix.from_scipy(-self._csr)

    def shifted(self, sigma) -> "SparseMatrix":
        """Explicit ``A - sigma*I``; the solvers never call this."""
        eye = sp.identity(self.n, dtype=field_dtype(self, sigma), format="csr")
        return SparseMatrix.from_scipy(self._csr - sigma * eye)

    def __matmul__(self, x):
        return matvec(self, x)

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.row_extents, other.row_extents)
            and np.array_equal(self.col_indices, other.col_indices)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self):
        return f"SparseMatrix(n={self.n}, nnz={self.nnz}, dtype={self.dtype})"


def _check_vector(A: SparseMatrix, x) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 1 or x.shape[0] != A.n:
        raise DimensionMismatch(f"vector of shape {x.shape} does not match matrix dimension {A.n}")
    return x


def matvec(A: SparseMatrix, x, counter: CostCounters | None = None, slot: str = "mvps") -> np.ndarray:
    """``y = A @ x``; bumps ``counter.<slot>`` by one when a counter is given."""
    x = _check_vector(A, x)
    y = A._csr @ x
    if counter is not None:
        counter.add(slot, 1)
    return y


def apply_shifted(A: SparseMatrix, sigma, x, counter: CostCounters | None = None,
                  slot: str = "mvps") -> np.ndarray:
    """``(A - sigma*I) @ x`` applied lazily; one product."""
    y = matvec(A, x, counter, slot)
    if sigma == 0:
        return y
    return y - sigma * x


class ShiftedOperator:
    """Callable ``x -> (A - sigma*I) x`` charging a counter slot per call.

    This is the operator callback handed to the basis builders, so the same
    stored matrix serves every shift.
    """

    def __init__(self, A: SparseMatrix, sigma=0.0, counter: CostCounters | None = None,
                 slot: str = "mvps"):
        self.A = A
        self.sigma = sigma
        self.counter = counter
        self.slot = slot
        self.n = A.n
        self.dtype = field_dtype(A, sigma if sigma != 0 else None)

    def __call__(self, x):
        return apply_shifted(self.A, self.sigma, x, self.counter, self.slot)

    def norm_estimate(self) -> float:
        return self.A.frobenius_norm(self.sigma)

    def matvec_flops(self) -> int:
        return 2 * self.A.nnz + (2 * self.n if self.sigma != 0 else 0)
