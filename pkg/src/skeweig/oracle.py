"""Dense reference decompositions for validating the sparse solver.

Everything here works on small dense matrices and is deliberately
independent of the Lanczos machinery: the spectral decomposition comes
from the real Schur form (LAPACK), and a one-sided Jacobi routine gives
a second opinion on singular values.  Tests use these as ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NonSquare, NotSkewSymmetric

_EPS = float(np.finfo(np.float64).eps)

#: Largest dimension the dense reference path accepts.  Beyond this the
#: O(n^3) cost stops being "instant" in a test suite.
MAX_DENSE_N = 400


@dataclass
class DenseSkewEig:
    """Full spectral data of a dense skew-symmetric matrix.

    ``sigmas`` holds the r positive magnitudes in descending order;
    columns of ``U`` and ``V`` hold the matching vectors, normalised so
    that ``A @ U[:, i] == -sigmas[i] * V[:, i]`` and
    ``A @ V[:, i] == sigmas[i] * U[:, i]``.  The eigenvalues of A are
    then ``+/- 1j * sigmas[i]`` with eigenvectors ``(U +/- 1j V)/sqrt(2)``,
    plus ``null_dim`` zeros.
    """

    sigmas: np.ndarray
    U: np.ndarray
    V: np.ndarray

    @property
    def null_dim(self) -> int:
        return self.U.shape[0] - 2 * self.sigmas.size

    def reconstruct(self) -> np.ndarray:
        """Rebuild the matrix as ``sum sigma_i (u v^T - v u^T)``."""
        US = self.U * self.sigmas
        VS = self.V * self.sigmas
        return US @ self.V.T - VS @ self.U.T


def dense_decompose(A: np.ndarray, zero_tol: float | None = None) -> DenseSkewEig:
    """Spectral decomposition of a dense skew-symmetric matrix.

    Uses the real Schur form: for skew-symmetric input the quasi-upper
    triangular factor is block diagonal with 2x2 blocks
    ``[[0, s], [-s, 0]]`` and scalar zeros, so magnitudes and invariant
    planes can be read off directly.

    Parameters
    ----------
    A : ndarray
        Square skew-symmetric matrix, ``n <= 400``.
    zero_tol : float, optional
        Magnitudes at or below this are folded into the null space.
        Defaults to ``n * eps * sigma_max``.

    Raises
    ------
    NonSquare
        If the input is not square.
    NotSkewSymmetric
        If ``A + A.T`` is not negligible relative to ``|A|``.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    if n > MAX_DENSE_N:
        raise ValueError(f"dense oracle is capped at n={MAX_DENSE_N}, got {n}")
    scale = float(np.abs(A).max()) if n else 0.0
    if scale and float(np.abs(A + A.T).max()) > 100.0 * _EPS * scale:
        raise NotSkewSymmetric("matrix is not skew-symmetric to working accuracy")
    work = (A - A.T) / 2.0

    if not n or not scale:
        empty = np.zeros((n, 0))
        return DenseSkewEig(sigmas=np.zeros(0), U=empty, V=empty)

    T, Z = scipy.linalg.schur(work, output="real")

    # For skew input the only structurally nonzero entries of T sit on
    # the first off-diagonals, one conjugate pair per 2x2 block.
    off = np.abs(np.diagonal(T, 1))
    sigma1 = float(off.max()) if off.size else 0.0
    if zero_tol is None:
        zero_tol = n * _EPS * sigma1
    cutoff = float(zero_tol)

    sigmas = []
    ucols = []
    vcols = []
    i = 0
    while i < n - 1:
        a = float(T[i, i + 1])
        c = float(T[i + 1, i])
        s = 0.5 * abs(a - c)
        if s <= cutoff:
            i += 1  # scalar (null) position
            continue
        # A z_i = c z_{i+1} and A z_{i+1} = a z_i; orient the pair so
        # that A u = -s v holds with s > 0.
        if a >= 0.0:
            ucols.append(Z[:, i])
            vcols.append(Z[:, i + 1])
        else:
            ucols.append(Z[:, i + 1])
            vcols.append(Z[:, i])
        sigmas.append(s)
        i += 2

    if not sigmas:
        empty = np.zeros((n, 0))
        return DenseSkewEig(sigmas=np.zeros(0), U=empty, V=empty)

    order = np.argsort(sigmas)[::-1]
    sig = np.asarray(sigmas)[order]
    U = np.column_stack(ucols)[:, order]
    V = np.column_stack(vcols)[:, order]
    return DenseSkewEig(sigmas=sig, U=U, V=V)


def measure_orthogonality(P: np.ndarray, Q: np.ndarray) -> dict[str, float]:
    """Worst-case loss of orthonormality within and across two bases.

    Returns ``{"left": ..., "right": ..., "cross": ...}`` where the
    first two are the largest off-diagonal Gram entries of P and Q and
    ``cross`` is ``max |P^T Q|``.
    """
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if P.shape[0] != Q.shape[0]:
        raise DimensionMismatch(
            f"bases live in different spaces: {P.shape[0]} vs {Q.shape[0]}"
        )

    def offdiag_max(M: np.ndarray) -> float:
        if not M.shape[1]:
            return 0.0
        G = M.T @ M
        np.fill_diagonal(G, 0.0)
        return float(np.abs(G).max())

    cross = 0.0
    if P.shape[1] and Q.shape[1]:
        cross = float(np.abs(P.T @ Q).max())
    return {"left": offdiag_max(P), "right": offdiag_max(Q), "cross": cross}


def jacobi_singular_values(
    M: np.ndarray, tol: float = 1e-14, max_sweeps: int = 60
) -> np.ndarray:
    """Singular values of a small dense matrix by one-sided Jacobi.

    Kept separate from LAPACK so singular values have two independent
    witnesses in the test suite.  Only suitable for small n.
    """
    W = np.array(M, dtype=np.float64, copy=True)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {W.shape}")
    n = W.shape[0]
    if n > 60:
        raise ValueError("jacobi path is meant for n <= 60")
    if not n:
        return np.zeros(0)

    limit = tol * max(1.0, float(np.abs(W).max())) ** 2
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                app = float(W[:, p] @ W[:, p])
                aqq = float(W[:, q] @ W[:, q])
                apq = float(W[:, p] @ W[:, q])
                if abs(apq) <= limit:
                    continue
                rotated = True
                zeta = (aqq - app) / (2.0 * apq)
                if zeta == 0.0:
                    t = 1.0
                else:
                    t = np.sign(zeta) / (abs(zeta) + np.hypot(1.0, zeta))
                cs = 1.0 / np.hypot(1.0, t)
                sn = cs * t
                wp = W[:, p].copy()
                W[:, p] = cs * wp - sn * W[:, q]
                W[:, q] = sn * wp + cs * W[:, q]
        if not rotated:
            break

    return np.sort(np.linalg.norm(W, axis=0))[::-1]
