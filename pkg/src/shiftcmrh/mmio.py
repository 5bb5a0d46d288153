"""Matrix Market coordinate-format reader and a small writer for debugging."""
from __future__ import annotations

import io
import os

import numpy as np

from .errors import MatrixMarketError
from .sparse import SparseMatrix

__all__ = ["read_matrix_market", "write_matrix_market"]

_FIELDS = ("real", "complex", "integer")
_SYMMETRIES = ("general", "symmetric", "hermitian", "skew-symmetric")


def _open_text(source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, "rb"), True
    if isinstance(source, (bytes, bytearray)):
        return io.BytesIO(source), True
    return source, False


def _parse_header(line: str):
    tokens = line.strip().split()
    if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket":
        raise MatrixMarketError(f"malformed header line: {line.strip()!r}")
    obj, fmt, field, symmetry = (t.lower() for t in tokens[1:])
    if obj != "matrix":
        raise MatrixMarketError(f"unsupported object {obj!r}")
    if fmt != "coordinate":
        raise MatrixMarketError(f"unsupported format {fmt!r}; only coordinate is read")
    if field == "pattern":
        raise MatrixMarketError("unsupported: pattern matrices")
    if field not in _FIELDS:
        raise MatrixMarketError(f"unsupported field {field!r}")
    if symmetry not in _SYMMETRIES:
        raise MatrixMarketError(f"unsupported symmetry {symmetry!r}")
    return field, symmetry


def read_matrix_market(source) -> SparseMatrix:
    """Read a square coordinate Matrix Market matrix.

    ``source`` may be a path, raw bytes, or a binary/text stream. Symmetric,
    hermitian and skew-symmetric storage is expanded to the full matrix and
    repeated entries are summed.
    """
    stream, owned = _open_text(source)
    try:
        raw = stream.read()
    finally:
        if owned:
            stream.close()
    text = raw.decode("ascii", errors="replace") if isinstance(raw, bytes) else raw
    lines = text.splitlines()
    if not lines:
        raise MatrixMarketError("empty input")
    field, symmetry = _parse_header(lines[0])

    body = (ln for ln in lines[1:] if ln.strip() and not ln.lstrip().startswith("%"))
    try:
        size_line = next(body)
    except StopIteration:
        raise MatrixMarketError("missing size line") from None
    try:
        nrows, ncols, nnz = (int(t) for t in size_line.split())
    except ValueError:
        raise MatrixMarketError(f"malformed size line: {size_line!r}") from None
    if nrows != ncols:
        raise MatrixMarketError(f"matrix is not square ({nrows} x {ncols})")
    if nrows < 1 or nnz < 0:
        raise MatrixMarketError(f"invalid size line: {size_line!r}")

    width = 4 if field == "complex" else 3
    entries = [ln.split() for ln in body]
    if len(entries) != nnz:
        raise MatrixMarketError(f"size line announces {nnz} entries, found {len(entries)}")
    if any(len(e) != width for e in entries):
        raise MatrixMarketError(f"every entry of a {field} matrix needs {width} fields")

    if nnz:
        table = np.array(entries, dtype=object)
        try:
            rows = table[:, 0].astype(np.int64) - 1
            cols = table[:, 1].astype(np.int64) - 1
            if field == "complex":
                vals = table[:, 2].astype(float) + 1j * table[:, 3].astype(float)
            else:
                vals = table[:, 2].astype(float)
        except ValueError as exc:
            raise MatrixMarketError(f"malformed entry: {exc}") from None
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0, dtype=complex if field == "complex" else float)

    bad = (rows < 0) | (rows >= nrows) | (cols < 0) | (cols >= nrows)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise MatrixMarketError(f"index out of range: ({rows[k] + 1}, {cols[k] + 1}) for n = {nrows}")

    if symmetry != "general":
        off = rows != cols
        if symmetry == "skew-symmetric" and np.any(~off & (vals != 0)):
            raise MatrixMarketError("skew-symmetric matrix with a nonzero diagonal entry")
        mirror = vals[off]
        if symmetry == "skew-symmetric":
            mirror = -mirror
        elif symmetry == "hermitian":
            mirror = np.conj(mirror)
        rows, cols = np.concatenate([rows, cols[off]]), np.concatenate([cols, rows[off]])
        vals = np.concatenate([vals, mirror])

    return SparseMatrix.from_coo(nrows, rows, cols, vals)


def write_matrix_market(A: SparseMatrix, target=None, comment: str | None = None) -> str:
    """Write ``A`` as a general coordinate file; returns the text.

    Values are printed with 17 significant digits so reading back reproduces
    them bit for bit.
    """
    field = "complex" if A.is_complex else "real"
    out = [f"%%MatrixMarket matrix coordinate {field} general"]
    if comment:
        out.extend(f"% {ln}" for ln in comment.splitlines())
    out.append(f"{A.n} {A.n} {A.nnz}")
    ext = A.row_extents
    for i in range(A.n):
        for k in range(ext[i], ext[i + 1]):
            v = A.values[k]
            j = A.col_indices[k]
            if field == "complex":
                out.append(f"{i + 1} {j + 1} {v.real:.17g} {v.imag:.17g}")
            else:
                out.append(f"{i + 1} {j + 1} {v:.17g}")
    text = "\n".join(out) + "\n"
    if target is not None:
        if isinstance(target, (str, os.PathLike)):
            with open(target, "w") as fh:
                fh.write(text)
        else:
            target.write(text)
    return text
