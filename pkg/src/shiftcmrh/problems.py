"""Finite-difference test matrices.

:func:`generate_cdr3d` discretizes ``eps*Lap(u) - beta.grad(u) + r*u`` on the
unit cube with homogeneous Dirichlet data, using the 7-point centered stencil
and natural (x-fastest) ordering of the interior points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sparse import SparseMatrix

__all__ = ["Cdr3dSpec", "generate_cdr3d", "interior_points"]

DEFAULT_BETA = (0.0, 250.0 / np.sqrt(5.0), 500.0 / np.sqrt(5.0))


@dataclass(frozen=True)
class Cdr3dSpec:
    h: float
    eps: float = 1.0
    beta: tuple = DEFAULT_BETA
    react: float = 400.0

    def __post_init__(self):
        if len(self.beta) != 3:
            raise ValueError("beta must have three components")


def interior_points(h: float) -> int:
    """Interior points per axis, ``1/h - 1``; ``1/h`` must be an integer."""
    if not h > 0:
        raise ValueError(f"grid spacing must be positive, got {h}")
    inv = 1.0 / h
    k = int(round(inv))
    if abs(inv - k) > 1e-9 * max(1.0, inv):
        raise ValueError(f"1/h must be an integer, got 1/h = {inv!r}")
    n = k - 1
    if n < 1:
        raise ValueError(f"grid spacing h = {h} leaves no interior points")
    return n


def generate_cdr3d(spec: Cdr3dSpec, negate: bool = False) -> SparseMatrix:
    """Assemble the CDR matrix of dimension ``N**3`` with ``N = 1/h - 1``.

    Diagonal entries are ``-6*eps/h**2 + r``. The neighbor at ``+h`` along
    axis ``k`` gets ``eps/h**2 - beta_k/(2h)``, the one at ``-h`` gets
    ``eps/h**2 + beta_k/(2h)``. Neighbors on the boundary are dropped since
    the boundary values vanish. With ``negate=True`` the result is ``-A``.
    """
    N = interior_points(spec.h)
    h = 1.0 / (N + 1)
    n = N**3
    diff = spec.eps / h**2
    idx = np.arange(n, dtype=np.int64)
    coords = (idx % N, (idx // N) % N, idx // (N * N))
    strides = (1, N, N * N)

    rows = [idx]
    cols = [idx]
    vals = [np.full(n, -6.0 * diff + spec.react)]
    for axis in range(3):
        c = coords[axis]
        conv = spec.beta[axis] / (2.0 * h)
        for step, coef in ((+1, diff - conv), (-1, diff + conv)):
            inside = (c + step >= 0) & (c + step < N)
            src = idx[inside]
            rows.append(src)
            cols.append(src + step * strides[axis])
            vals.append(np.full(src.size, coef))

    values = np.concatenate(vals)
    if negate:
        values = -values
    return SparseMatrix.from_coo(n, np.concatenate(rows), np.concatenate(cols), values)
