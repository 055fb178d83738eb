"""Matrix Market coordinate I/O.

Hand-rolled instead of ``scipy.io.mmread`` because the package needs
line-numbered parse errors, the skew-symmetric expansion rule
``(i, j, v) -> (j, i, -v)``, and a writer whose output round-trips
bit-exactly (values are emitted with ``repr``, the shortest string that
parses back to the identical double).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import NonSquare, ParseError, UnsupportedField
from .sparse import SkewSparseMatrix

__all__ = ["read_matrix_market", "read_matrix_market_general", "write_matrix_market"]

_SYMMETRIES = ("general", "symmetric", "skew-symmetric")


def _parse_file(path):
    """Parse a coordinate file into (nrows, ncols, symmetry, rows, cols, vals).

    Indices are converted to 0-based.  Symmetric storage is *not* expanded
    here; the caller decides how to mirror.
    """
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", 1)

    header = lines[0].split()
    if len(header) != 5 or header[0].lower() != "%%matrixmarket":
        raise ParseError("expected '%%MatrixMarket object format field symmetry' header", 1)
    obj, fmt, field, symmetry = (tok.lower() for tok in header[1:])
    if obj != "matrix":
        raise ParseError(f"unsupported object {obj!r}", 1)
    if fmt != "coordinate":
        raise ParseError(f"unsupported format {fmt!r} (only coordinate)", 1)
    if field in ("complex", "pattern"):
        raise UnsupportedField(f"field {field!r} is not supported")
    if field not in ("real", "integer", "double"):
        raise ParseError(f"unknown field {field!r}", 1)
    if symmetry not in _SYMMETRIES:
        raise ParseError(f"unknown symmetry {symmetry!r}", 1)

    # Skip comment and blank lines up to the size line.
    k = 1
    while k < len(lines) and (not lines[k].strip() or lines[k].lstrip().startswith("%")):
        k += 1
    if k == len(lines):
        raise ParseError("missing size line", len(lines))
    size_tok = lines[k].split()
    if len(size_tok) != 3:
        raise ParseError("size line must be 'rows cols nnz'", k + 1)
    try:
        nrows, ncols, nnz = (int(t) for t in size_tok)
    except ValueError:
        raise ParseError("size line must contain three integers", k + 1) from None
    if nrows < 0 or ncols < 0 or nnz < 0:
        raise ParseError("size line entries must be nonnegative", k + 1)

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.float64)
    count = 0
    for lineno in range(k + 1, len(lines)):
        text = lines[lineno].strip()
        if not text or text.startswith("%"):
            continue
        if count >= nnz:
            raise ParseError(f"more than the declared {nnz} entries", lineno + 1)
        tok = text.split()
        if len(tok) != 3:
            raise ParseError("entry line must be 'row col value'", lineno + 1)
        try:
            i, j, v = int(tok[0]), int(tok[1]), float(tok[2])
        except ValueError:
            raise ParseError(f"could not parse entry {text!r}", lineno + 1) from None
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise ParseError(f"index ({i}, {j}) out of range for {nrows}x{ncols}", lineno + 1)
        if symmetry == "skew-symmetric":
            if i == j:
                raise ParseError("diagonal entry in a skew-symmetric file", lineno + 1)
            if i < j:
                raise ParseError(
                    "skew-symmetric entries must lie strictly below the diagonal", lineno + 1
                )
        elif symmetry == "symmetric" and i < j:
            raise ParseError("symmetric entries must lie on or below the diagonal", lineno + 1)
        rows[count], cols[count], vals[count] = i - 1, j - 1, v
        count += 1
    if count != nnz:
        raise ParseError(f"declared {nnz} entries but found {count}", len(lines))
    return nrows, ncols, symmetry, rows, cols, vals


def read_matrix_market(path):
    """Read a Matrix Market coordinate file as a :class:`SkewSparseMatrix`.

    Accepts ``general``, ``symmetric`` and ``skew-symmetric`` symmetry
    headers; symmetric storage is expanded before the structural check, so
    a ``symmetric`` file passes only if it is the zero matrix.  Indices are
    1-based on disk.

    Raises
    ------
    ParseError, UnsupportedField, NotSkewSymmetric, NonSquare
    """
    nrows, ncols, symmetry, rows, cols, vals = _parse_file(path)
    if nrows != ncols:
        raise NonSquare(f"skew-symmetric matrix must be square, file is {nrows}x{ncols}")
    if symmetry == "skew-symmetric":
        rows, cols, vals = (
            np.concatenate([rows, cols]),
            np.concatenate([cols, rows]),
            np.concatenate([vals, -vals]),
        )
    elif symmetry == "symmetric":
        off = rows != cols
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, vals[off]]),
        )
    return SkewSparseMatrix.from_triplets(nrows, zip(rows.tolist(), cols.tolist(), vals.tolist()))


def read_matrix_market_general(path):
    """Read any real coordinate file as a scipy CSR array (may be rectangular).

    Symmetric and skew-symmetric storage is expanded to both triangles.
    """
    nrows, ncols, symmetry, rows, cols, vals = _parse_file(path)
    if symmetry == "skew-symmetric":
        rows, cols, vals = (
            np.concatenate([rows, cols]),
            np.concatenate([cols, rows]),
            np.concatenate([vals, -vals]),
        )
    elif symmetry == "symmetric":
        off = rows != cols
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, vals[off]]),
        )
    out = sp.csr_array((vals, (rows, cols)), shape=(nrows, ncols))
    out.sum_duplicates()
    out.sort_indices()
    return out


def write_matrix_market(path, matrix, comment=None):
    """Write a matrix in coordinate format.

    A :class:`SkewSparseMatrix` is written with the ``skew-symmetric``
    header, storing only the strictly lower triangle; anything else is
    written entry-by-entry with the ``general`` header.  Values are
    formatted with ``repr`` so that reading the file back reproduces every
    double bit-for-bit.
    """
    if isinstance(matrix, SkewSparseMatrix):
        coo = sp.coo_array(matrix.tocsr())
        keep = coo.row > coo.col
        rows, cols, vals = coo.row[keep], coo.col[keep], coo.data[keep]
        symmetry = "skew-symmetric"
        shape = matrix.shape
    else:
        if sp.issparse(matrix):
            coo = sp.coo_array(matrix)
        else:
            coo = sp.coo_array(np.asarray(matrix, dtype=np.float64))
        rows, cols, vals = coo.row, coo.col, coo.data
        symmetry = "general"
        shape = coo.shape
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate real {symmetry}\n")
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{shape[0]} {shape[1]} {vals.size}\n")
        for i, j, v in zip(rows.tolist(), cols.tolist(), vals.tolist()):
            fh.write(f"{i + 1} {j + 1} {v!r}\n")
