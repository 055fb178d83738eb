"""Upper-bidiagonal SVD kernel with explicit rotation accumulation.

Implements the implicit-shift QR (Golub-Kahan) iteration directly instead
of calling into LAPACK, because restarting needs two things LAPACK does not
expose: sweeps with *caller-chosen* shifts, and the accumulated left/right
rotation products ``C``/``D`` for those sweeps alone.  The full SVD here is
the same machinery run with Wilkinson shifts until every superdiagonal
entry deflates.

Conventions.  ``B`` is m x m upper bidiagonal with diagonal ``betas`` and
superdiagonal ``gammas``.  Every routine maintains the factorization
``B_in = C @ B_cur @ D.T`` with orthogonal ``C`` and ``D``, so on exit
``B_out = C.T @ B_in @ D``.  For the full SVD this gives
``B d_j = theta_j c_j`` and ``B.T c_j = theta_j d_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence

__all__ = ["BidiagonalMatrix", "BidiagonalSVD", "svd", "implicit_qr_sweeps"]


@dataclass
class BidiagonalMatrix:
    """Square upper-bidiagonal matrix: diagonal ``betas``, superdiagonal ``gammas``.

    Zero entries are legitimate only as breakdown/deflation markers.
    """

    betas: np.ndarray
    gammas: np.ndarray

    def __post_init__(self):
        self.betas = np.atleast_1d(np.asarray(self.betas, dtype=np.float64))
        self.gammas = np.asarray(self.gammas, dtype=np.float64).reshape(-1)
        if self.gammas.size != self.betas.size - 1:
            raise ValueError(
                f"need len(gammas) == len(betas) - 1, got {self.gammas.size} and {self.betas.size}"
            )

    @property
    def m(self):
        return self.betas.size

    def toarray(self):
        return np.diag(self.betas) + np.diag(self.gammas, 1)


@dataclass
class BidiagonalSVD:
    """SVD ``B = C @ diag(thetas) @ D.T`` of an upper-bidiagonal matrix.

    ``thetas`` is sorted in decreasing order (strictly decreasing whenever
    ``B`` is unreduced, since unreduced bidiagonals have simple singular
    values).  The sign convention makes each column ``c_j``'s largest-
    magnitude entry positive; ``d_j`` flips together with ``c_j``.
    """

    thetas: np.ndarray
    C: np.ndarray
    D: np.ndarray


def _givens(f, g):
    """Rotation (c, s) with  [c s; -s c] @ [f; g] = [r; 0]."""
    if g == 0.0:
        return 1.0, 0.0
    r = math.hypot(f, g)
    return f / r, g / r


def _combine_cols(M, a, b, c, s):
    """Columns (a, b) of M <- (c*M_a + s*M_b, -s*M_a + c*M_b)."""
    ma = M[:, a].copy()
    M[:, a] *= c
    M[:, a] += s * M[:, b]
    M[:, b] *= c
    M[:, b] -= s * ma


_REARM = 1.0  # mid-sweep deflation threshold multiplier (0 disables)


def _sweep(d, e, lo, hi, mu, C, D):
    """One implicit-shift QR sweep (shift mu**2 on B^T B) over block [lo, hi].

    If the bulge pair collapses to roundoff mid-chase (the forward-
    instability scenario of a perfect shift whose singular vector has no
    support at the bottom), the coupling is deflated to exactly zero and
    the shift is re-armed on the remaining trailing block, the same cure
    ARPACK applies in its shift-application kernels.  Zeroing an entry
    already at roundoff level keeps the sweep backward stable.
    """
    eps = np.finfo(np.float64).eps * _REARM
    y = (d[lo] - mu) * (d[lo] + mu)
    z = d[lo] * e[lo]
    for i in range(lo, hi):
        fresh = i == lo
        if not fresh and abs(y) + abs(z) <= eps * (abs(d[i - 1]) + abs(d[i])):
            e[i - 1] = 0.0
            y = (d[i] - mu) * (d[i] + mu)
            z = d[i] * e[i]
            fresh = True
        c, s = _givens(y, z)
        if not fresh:
            e[i - 1] = c * y + s * z
        # column rotation on (i, i+1)
        t = c * d[i] + s * e[i]
        e[i] = -s * d[i] + c * e[i]
        d[i] = t
        bulge = s * d[i + 1]
        d[i + 1] = c * d[i + 1]
        _combine_cols(D, i, i + 1, c, s)
        # row rotation on (i, i+1), killing the bulge below the diagonal
        c, s = _givens(d[i], bulge)
        d[i] = c * d[i] + s * bulge
        t = c * e[i] + s * d[i + 1]
        d[i + 1] = -s * e[i] + c * d[i + 1]
        e[i] = t
        _combine_cols(C, i, i + 1, c, s)
        if i < hi - 1:
            y = e[i]
            z = s * e[i + 1]
            e[i + 1] = c * e[i + 1]


def _chase_zero_diag_row(d, e, i, hi, C):
    """d[i] == 0 with i < hi: annihilate e[i] with row rotations, zeroing row i."""
    f = e[i]
    e[i] = 0.0
    for l in range(i + 1, hi + 1):
        c, s = _givens(d[l], f)
        d[l] = c * d[l] + s * f
        _combine_cols(C, l, i, c, s)
        if l < hi:
            f = -s * e[l]
            e[l] = c * e[l]


def _chase_zero_diag_col(d, e, hi, lo, D):
    """d[hi] == 0: annihilate e[hi-1] with column rotations, zeroing column hi."""
    f = e[hi - 1]
    e[hi - 1] = 0.0
    for l in range(hi - 1, lo - 1, -1):
        c, s = _givens(d[l], f)
        d[l] = c * d[l] + s * f
        _combine_cols(D, l, hi, c, s)
        if l > lo:
            f = -s * e[l - 1]
            e[l - 1] = c * e[l - 1]


def _wilkinson(d, e, lo, hi):
    """Wilkinson shift mu (unsquared) from the trailing 2x2 of (B^T B)[lo:hi]."""
    t11 = d[hi - 1] ** 2 + (e[hi - 2] ** 2 if hi - 1 > lo else 0.0)
    t12 = d[hi - 1] * e[hi - 1]
    t22 = d[hi] ** 2 + e[hi - 1] ** 2
    if t12 == 0.0:
        lam = t22
    else:
        delta = 0.5 * (t11 - t22)
        denom = delta + math.copysign(math.hypot(delta, t12), delta if delta != 0.0 else 1.0)
        lam = t22 - t12 * t12 / denom
    return math.sqrt(lam) if lam > 0.0 else 0.0


def svd(B, sweep_budget_per_row=30):
    """Full SVD of an upper-bidiagonal matrix with accumulated rotations.

    Parameters
    ----------
    B : BidiagonalMatrix
    sweep_budget_per_row : int
        The iteration raises :class:`~skeweig.errors.NoConvergence` after
        ``sweep_budget_per_row * m`` QR sweeps.

    Returns
    -------
    BidiagonalSVD
    """
    d = B.betas.copy()
    e = B.gammas.copy()
    m = d.size
    C = np.eye(m)
    D = np.eye(m)
    eps = np.finfo(np.float64).eps
    budget = sweep_budget_per_row * m
    sweeps = 0

    while True:
        # Deflate negligible superdiagonal entries.
        for i in range(m - 1):
            if e[i] != 0.0 and abs(e[i]) <= eps * (abs(d[i]) + abs(d[i + 1])):
                e[i] = 0.0
        # Trailing fully-diagonal part.
        hi = m - 1
        while hi > 0 and e[hi - 1] == 0.0:
            hi -= 1
        if hi == 0:
            break
        lo = hi - 1
        while lo > 0 and e[lo - 1] != 0.0:
            lo -= 1
        # Split at a negligible diagonal entry, if any.
        scale = max(np.max(np.abs(d[lo : hi + 1])), np.max(np.abs(e[lo:hi])))
        tiny = np.flatnonzero(np.abs(d[lo : hi + 1]) <= eps * scale)
        if tiny.size:
            i = lo + int(tiny[0])
            d[i] = 0.0
            if i < hi:
                _chase_zero_diag_row(d, e, i, hi, C)
            else:
                _chase_zero_diag_col(d, e, hi, lo, D)
            continue
        _sweep(d, e, lo, hi, _wilkinson(d, e, lo, hi), C, D)
        sweeps += 1
        if sweeps > budget:
            raise NoConvergence(f"bidiagonal SVD did not deflate within {budget} sweeps")

    # Nonnegative values: flip the left vector together with the value.
    neg = d < 0.0
    d[neg] = -d[neg]
    C[:, neg] = -C[:, neg]
    order = np.argsort(-d, kind="stable")
    d = d[order]
    C = C[:, order]
    D = D[:, order]
    # Sign convention: largest-magnitude entry of each c_j positive.
    for j in range(m):
        i = int(np.argmax(np.abs(C[:, j])))
        if C[i, j] < 0.0:
            C[:, j] = -C[:, j]
            D[:, j] = -D[:, j]
    return BidiagonalSVD(thetas=d, C=C, D=D)


def implicit_qr_sweeps(B, shifts):
    """Run one implicit-shift QR sweep per shift, accumulating rotations.

    Each shift ``mu`` performs one Golub-Kahan bulge chase over the full
    matrix, equivalent to a QR step on ``B^T B`` with shift ``mu**2``.
    Afterwards diagonal sign matrices are absorbed into ``C``/``D`` so the
    returned bidiagonal has nonnegative entries.

    Parameters
    ----------
    B : BidiagonalMatrix
    shifts : sequence of float
        Applied in the given order.  An exact singular value of ``B`` as a
        shift deflates it to the trailing diagonal position in one sweep.

    Returns
    -------
    (BidiagonalMatrix, C, D)
        With ``C.T @ B @ D`` equal to the returned bidiagonal and
        ``C``/``D`` orthogonal.  Empty ``shifts`` returns ``(copy(B), I, I)``.
    """
    d = B.betas.copy()
    e = B.gammas.copy()
    m = d.size
    C = np.eye(m)
    D = np.eye(m)
    if m > 1:
        for mu in shifts:
            _sweep(d, e, 0, m - 1, float(mu), C, D)
    # Absorb diagonal sign matrices (B = (C Sc)(Sc B_cur Sd)(D Sd)^T with
    # Sc, Sd chosen greedily so every entry of the bidiagonal flips positive).
    s_c = np.ones(m)
    s_d = np.ones(m)
    for i in range(m):
        s_c[i] = s_d[i] if d[i] >= 0.0 else -s_d[i]
        if i < m - 1:
            s_d[i + 1] = s_c[i] if e[i] >= 0.0 else -s_c[i]
    C *= s_c[np.newaxis, :]
    D *= s_d[np.newaxis, :]
    return BidiagonalMatrix(betas=np.abs(d), gammas=np.abs(e)), C, D
