"""Sparse skew-symmetric matrices in CSR form.

A :class:`SkewSparseMatrix` stores both triangles explicitly so that matrix-
vector products are a single CSR pass.  The structural invariant is exact:
every stored entry ``(i, j, v)`` is matched by ``(j, i, -v)`` with ``-v``
the literal IEEE negation, and nothing is ever stored on the diagonal.
Construction fails loudly (:class:`~skeweig.errors.NotSkewSymmetric`) rather
than symmetrizing on the caller's behalf; use :func:`skew_symmetrize` when a
general square matrix should be projected onto its skew part.
"""

from __future__ import annotations

import threading

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, NonSquare, NotSkewSymmetric

__all__ = ["SkewSparseMatrix", "skew_symmetrize", "block_embed"]


class SkewSparseMatrix:
    """Immutable sparse skew-symmetric matrix with a matvec counter.

    Attributes
    ----------
    n : int
        Order of the matrix.
    row_ptr, col_idx, values : ndarray
        CSR arrays covering *both* triangles.  The buffers are read-only.
    nnz : int
        Number of stored entries (zeros are never stored).
    mv_count : int
        Number of :meth:`matvec` calls performed through this handle since
        construction.  Monotone; incremented atomically once per call.
    """

    def __init__(self, n, row_ptr, col_idx, values, _validated=False):
        row_ptr = np.ascontiguousarray(row_ptr, dtype=np.int64)
        col_idx = np.ascontiguousarray(col_idx, dtype=np.int64)
        values = np.ascontiguousarray(values, dtype=np.float64)
        if not _validated:
            _validate_structure(n, row_ptr, col_idx, values)
        for arr in (row_ptr, col_idx, values):
            arr.flags.writeable = False
        self._n = int(n)
        self._row_ptr = row_ptr
        self._col_idx = col_idx
        self._values = values
        self._mv_count = 0
        self._mv_lock = threading.Lock()
        # scipy handle sharing the read-only buffers; used for products only.
        self._csr = sp.csr_array((values, col_idx, row_ptr), shape=(self._n, self._n))

    # -- construction -------------------------------------------------------

    @classmethod
    def from_triplets(cls, n, entries):
        """Build a matrix from ``(i, j, value)`` triplets (0-based).

        Duplicate entries are summed.  The summation order is the order of
        appearance in ``entries`` within each ``(i, j)`` group (a stable
        lexicographic sort groups duplicates without reordering them), so
        the result is reproducible for a fixed input sequence.  Entries
        whose sum is exactly zero are dropped before the structural check.

        Raises
        ------
        NotSkewSymmetric
            If any summed diagonal entry is nonzero, or any off-diagonal
            entry lacks a mirror entry equal to its exact negation.
        ValueError
            If an index is out of range.
        """
        n = int(n)
        if n < 1:
            raise ValueError(f"matrix order must be >= 1, got {n}")
        entries = list(entries)
        if entries:
            rows = np.array([e[0] for e in entries], dtype=np.int64)
            cols = np.array([e[1] for e in entries], dtype=np.int64)
            vals = np.array([e[2] for e in entries], dtype=np.float64)
        else:
            rows = np.empty(0, dtype=np.int64)
            cols = np.empty(0, dtype=np.int64)
            vals = np.empty(0, dtype=np.float64)
        if rows.size and (rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= n):
            raise ValueError("triplet index out of range")

        # Stable lexicographic sort, then sum runs of identical (i, j) in
        # their order of appearance.
        order = np.lexsort((cols, rows), )
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            boundary = np.ones(rows.size, dtype=bool)
            boundary[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(boundary)
            summed = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
            keep = summed != 0.0
            diag = rows == cols
            bad_diag = diag & keep
            if bad_diag.any():
                i = int(rows[bad_diag][0])
                raise NotSkewSymmetric(
                    f"nonzero diagonal entry at ({i}, {i}): {summed[bad_diag][0]!r}"
                )
            keep &= ~diag
            rows, cols, vals = rows[keep], cols[keep], summed[keep]

        csr = sp.csr_array((vals, (rows, cols)), shape=(n, n))
        csr.sort_indices()
        return cls(n, csr.indptr, csr.indices, csr.data)

    # -- queries ------------------------------------------------------------

    @property
    def n(self):
        return self._n

    @property
    def shape(self):
        return (self._n, self._n)

    @property
    def nnz(self):
        return int(self._values.size)

    @property
    def row_ptr(self):
        return self._row_ptr

    @property
    def col_idx(self):
        return self._col_idx

    @property
    def values(self):
        return self._values

    @property
    def mv_count(self):
        return self._mv_count

    # -- products -----------------------------------------------------------

    def matvec(self, x):
        """Return ``A @ x``, incrementing the matvec counter by one.

        Raises
        ------
        DimensionMismatch
            If ``x`` does not have length ``n``.
        """
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self._n,):
            raise DimensionMismatch(
                f"matvec operand has shape {x.shape}, expected ({self._n},)"
            )
        with self._mv_lock:
            self._mv_count += 1
        return self._csr @ x

    def __matmul__(self, x):
        return self.matvec(x)

    def tocsr(self):
        """Raw scipy CSR handle sharing this matrix's (read-only) buffers.

        Products through the returned handle do not touch the counter.
        """
        return sp.csr_array(
            (self._values, self._col_idx, self._row_ptr), shape=(self._n, self._n)
        )

    def toarray(self):
        return self.tocsr().toarray()

    def __repr__(self):
        return f"SkewSparseMatrix(n={self._n}, nnz={self.nnz}, mv_count={self._mv_count})"


def _validate_structure(n, row_ptr, col_idx, values):
    n = int(n)
    if row_ptr.shape != (n + 1,):
        raise ValueError("row_ptr has wrong length")
    if row_ptr[0] != 0 or row_ptr[-1] != values.size or np.any(np.diff(row_ptr) < 0):
        raise ValueError("row_ptr is not a valid CSR pointer array")
    if col_idx.shape != values.shape:
        raise ValueError("col_idx/values length mismatch")
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(row_ptr))
    if col_idx.size:
        if col_idx.min() < 0 or col_idx.max() >= n:
            raise ValueError("column index out of range")
        same_row = rows[1:] == rows[:-1]
        if np.any(same_row & (np.diff(col_idx) <= 0)):
            raise ValueError("column indices must be strictly increasing within each row")
    if np.any(rows == col_idx):
        k = int(np.flatnonzero(rows == col_idx)[0])
        if values[k] != 0.0:
            raise NotSkewSymmetric(f"nonzero diagonal entry at ({rows[k]}, {rows[k]})")
        raise ValueError("explicit zero diagonal entries are not stored")
    # Every (i, j, v) must have the mirror (j, i, -v), exactly.
    order = np.lexsort((rows, col_idx))  # sort by (j, i): the transpose ordering
    if not (
        np.array_equal(rows, col_idx[order])
        and np.array_equal(col_idx, rows[order])
        and np.array_equal(values, -values[order])
    ):
        raise NotSkewSymmetric("off-diagonal entries do not mirror with exact negation")


def skew_symmetrize(matrix):
    """Skew part ``(M - M^T)/2`` of a general square matrix.

    The diagonal cancels exactly and the two triangles come out as exact
    negations of each other (IEEE subtraction satisfies
    ``fl(a - b) == -fl(b - a)``), so the result always passes the
    :class:`SkewSparseMatrix` structural check.

    Parameters
    ----------
    matrix : scipy sparse matrix, ndarray, or SkewSparseMatrix
        Square input.  A :class:`SkewSparseMatrix` is returned unchanged.

    Raises
    ------
    NonSquare
        If the input is not square.
    """
    if isinstance(matrix, SkewSparseMatrix):
        return matrix
    if sp.issparse(matrix):
        m = sp.csr_array(matrix, dtype=np.float64)
    else:
        m = sp.csr_array(np.asarray(matrix, dtype=np.float64))
    if m.shape[0] != m.shape[1]:
        raise NonSquare(f"skew_symmetrize needs a square matrix, got {m.shape}")
    s = (m - m.T) * 0.5
    s = sp.csr_array(s)
    s.eliminate_zeros()
    s.sort_indices()
    return SkewSparseMatrix(m.shape[0], s.indptr, s.indices, s.data)


def block_embed(rect):
    """Embed a rectangular matrix R as ``[[0, R], [-R^T, 0]]``.

    The result is an ``(p+q) x (p+q)`` skew-symmetric matrix whose nonzero
    singular values are those of ``R``, which turns a rectangular singular
    value problem into a skew-symmetric eigenvalue problem.

    Parameters
    ----------
    rect : scipy sparse matrix or ndarray, shape (p, q)
    """
    if sp.issparse(rect):
        r = sp.coo_array(rect)
    else:
        arr = np.asarray(rect, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("block_embed needs a 2-d matrix")
        r = sp.coo_array(arr)
    p, q = r.shape
    n = p + q
    rows = np.concatenate([r.row, r.col + p])
    cols = np.concatenate([r.col + p, r.row])
    vals = np.concatenate([r.data, -r.data])
    a = sp.csr_array((vals, (rows, cols)), shape=(n, n))
    a.sum_duplicates()
    a.eliminate_zeros()
    a.sort_indices()
    return SkewSparseMatrix(n, a.indptr, a.indices, a.data)
