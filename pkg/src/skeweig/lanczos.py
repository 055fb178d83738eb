"""Lanczos bidiagonalization of a skew-symmetric matrix, in real arithmetic.

One step of the recurrence maps the current right vector ``q_j`` to a new
left vector ``p_j`` and right vector ``q_{j+1}``::

    s_j = A q_j - gamma_{j-1} p_{j-1},   beta_j  = ||s_j||,  p_j = s_j / beta_j
    t_j = -A p_j - beta_j q_j,           gamma_j = ||t_j||,  q_{j+1} = t_j / gamma_j

costing exactly two matrix-vector products.  After ``j`` steps the columns
collected in ``P`` and ``Q`` satisfy

    A Q_j = P_j B_j          A P_j = -Q_{j+1} [B_j, gamma_j e_j]^T

with ``B_j`` upper bidiagonal (diagonal ``beta``, superdiagonal ``gamma``).
A vanishing ``gamma_j`` means the computed factors span an exact invariant
subspace; a vanishing ``beta_j`` can only happen if the matrix is
numerically singular on the Krylov space.

Orthogonality among and between the ``P``/``Q`` families is maintained
either fully (two block Gram-Schmidt sweeps per new vector, debug mode) or
selectively through an :class:`~skeweig.reorth.OrthoEstimates` tracker.
"""

from __future__ import annotations

import numpy as np

from .bidiagonal import BidiagonalMatrix
from .errors import Breakdown, VectorAnnihilated, ZeroStartVector
from .reorth import OrthoEstimates
from .sparse import SkewSparseMatrix

_EPS = float(np.finfo(np.float64).eps)


class LanczosState:
    """Mutable factorization state owned by a single solve loop.

    After ``j`` completed steps: ``P`` holds ``j`` columns, ``Q`` holds
    ``j+1``, ``betas`` and ``gammas`` hold ``j`` coefficients each — the last
    gamma being the coupling of the square factor ``B_j`` to ``q_{j+1}``.
    The buffers are preallocated at the maximum expansion length ``m``.
    """

    def __init__(self, n: int, m: int):
        self.n = int(n)
        self.m = int(m)
        self.j = 0
        self.q_count = 0  # valid Q columns; j after a gamma breakdown, else j+1
        self._P = np.zeros((n, m))
        self._Q = np.zeros((n, m + 1))
        self.betas: list[float] = []
        self.gammas: list[float] = []
        self.breakdown: Breakdown | None = None
        self.anorm_ref = 0.0

    @property
    def P(self) -> np.ndarray:
        return self._P[:, : self.j]

    @property
    def Q(self) -> np.ndarray:
        return self._Q[:, : self.q_count]

    @property
    def B(self) -> BidiagonalMatrix:
        """The square bidiagonal factor of the current ``j``-step relation."""
        return BidiagonalMatrix(
            np.asarray(self.betas), np.asarray(self.gammas[: self.j - 1])
        )

    @property
    def coupling(self) -> float:
        """gamma_j, linking ``B_j`` to the extra right vector ``q_{j+1}``."""
        return self.gammas[self.j - 1]

    def residual_matrices(self, A: SkewSparseMatrix):
        """Residuals of the two factorization relations, for diagnostics."""
        j = self.j
        B = self.B.toarray()
        R1 = A.tocsr() @ self.Q[:, :j] - self.P @ B
        if self.q_count == j + 1:
            Bhat = np.hstack([B, np.zeros((j, 1))])
            Bhat[-1, -1] = self.coupling
            R2 = A.tocsr() @ self.P + self.Q @ Bhat.T
        else:
            # gamma breakdown: the subspace closed, no extra right vector
            R2 = A.tocsr() @ self.P + self.Q @ B.T
        return R1, R2


def start(A: SkewSparseMatrix, q1: np.ndarray, m: int) -> LanczosState:
    """Open a factorization of capacity ``m`` from start vector ``q1``.

    ``q1`` is normalized internally; an exactly zero vector is rejected.
    """
    q1 = np.asarray(q1, dtype=np.float64).ravel()
    if q1.shape[0] != A.n:
        raise ZeroStartVector(
            f"start vector has length {q1.shape[0]}, matrix order is {A.n}"
        )
    if not np.all(np.isfinite(q1)):
        raise ZeroStartVector("start vector has non-finite entries")
    nrm = float(np.linalg.norm(q1))
    if nrm == 0.0:
        raise ZeroStartVector("start vector is identically zero")
    state = LanczosState(A.n, m)
    state._Q[:, 0] = q1 / nrm
    state.q_count = 1
    return state


def _block_mgs(v: np.ndarray, blocks) -> np.ndarray:
    """Two classical Gram-Schmidt sweeps of ``v`` against each basis block."""
    for _ in range(2):
        for X in blocks:
            if X.shape[1]:
                v -= X @ (X.T @ v)
    return v


def step(
    state: LanczosState,
    A: SkewSparseMatrix,
    est: OrthoEstimates | None = None,
    full_reorth: bool = False,
) -> LanczosState:
    """Run one Lanczos step, consuming two matvecs.

    With ``est`` supplied, reorthogonalization is selective: the estimate
    recurrences decide which existing columns the new vectors must be
    orthogonalized against, and the estimates are repaired accordingly.
    With ``full_reorth`` every existing column is used (no tracker needed).

    Raises :class:`Breakdown` — tagged ``"gamma"`` when the invariant
    subspace closed (the computed triplets are then exact), ``"beta"`` when
    the left vector vanished.  The state is left consistent: a gamma
    breakdown keeps all ``j`` completed steps, a beta breakdown rewinds to
    step ``j-1``.  Estimate columns written for the abandoned step are
    never read again.
    """
    if state.breakdown is not None:
        raise state.breakdown
    if state.j >= state.m:
        raise ValueError("factorization is at capacity")
    j = state.j + 1
    jc = j - 1
    n = state.n

    q_j = state._Q[:, jc]
    s = A.matvec(q_j)
    if jc:
        s -= state.gammas[jc - 1] * state._P[:, jc - 1]

    beta_prov = float(np.linalg.norm(s))
    if full_reorth:
        s = _block_mgs(s, (state._P[:, :jc], state._Q[:, :j]))
    elif est is not None and beta_prov > state.n * _EPS * est.anorm_est:
        state.betas.append(beta_prov)
        est.update_phi_omega_row(j, state.betas, state.gammas)
        sets = est.index_sets(j)
        state.betas.pop()
        try:
            s = est.reorthogonalize_left(s, state._P, state._Q, j, sets)
        except VectorAnnihilated as exc:
            state.breakdown = Breakdown("beta", j, float(np.linalg.norm(s)))
            raise state.breakdown from exc

    beta = float(np.linalg.norm(s))
    breakdown_tol = n * _EPS * (est.anorm_est if est is not None else state.anorm_ref)
    if beta <= breakdown_tol:
        state.breakdown = Breakdown("beta", j, beta)
        raise state.breakdown
    state.betas.append(beta)
    if est is not None:
        est.finalize_left(j, beta)
    state._P[:, jc] = s / beta

    t = -A.matvec(state._P[:, jc])
    t -= beta * q_j

    gamma_prov = float(np.linalg.norm(t))
    if full_reorth:
        t = _block_mgs(t, (state._Q[:, :j], state._P[:, :j]))
    elif est is not None and gamma_prov > state.n * _EPS * est.anorm_est:
        state.gammas.append(gamma_prov)
        est.update_psi_omega_col(j, state.betas, state.gammas)
        sets = est.index_sets(j)
        state.gammas.pop()
        try:
            t = est.reorthogonalize_right(t, state._P, state._Q, j, sets)
        except VectorAnnihilated as exc:
            state.gammas.append(float(np.linalg.norm(t)))
            state.j = j
            state.breakdown = Breakdown("gamma", j, state.gammas[-1])
            raise state.breakdown from exc

    gamma = float(np.linalg.norm(t))
    state.anorm_ref = max(state.anorm_ref, float(np.hypot(beta, gamma)))
    breakdown_tol = n * _EPS * (est.anorm_est if est is not None else state.anorm_ref)
    state.gammas.append(gamma)
    state.j = j
    if gamma <= breakdown_tol:
        state.breakdown = Breakdown("gamma", j, gamma)
        raise state.breakdown
    if est is not None:
        est.finalize_right(j, gamma)
    state._Q[:, j] = t / gamma
    state.q_count = j + 1
    if est is not None:
        est.update_anorm_estimate(j, state.betas, state.gammas)
    return state
