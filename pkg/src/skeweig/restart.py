"""Implicit restart: exact-shift selection and compaction to order ``k``.

After ``m`` expansion steps the driver keeps the ``k`` wanted Ritz triplets
and removes the ``m - k`` unwanted ones by running one implicit-shift QR
sweep per unwanted Ritz value on the small bidiagonal factor (see
:func:`skeweig.bidiagonal.implicit_qr_sweeps`).  Because each shift is an
exact singular value of ``B_m`` it deflates to the trailing position in one
sweep, so truncating to the leading ``k``-by-``k`` block afterwards leaves a
valid ``k``-step factorization whose Ritz values are the wanted ones, at the
cost of zero extra matrix-vector products.

A shift too close to the smallest *wanted* Ritz value would deflate part of
the wanted space along with it; such shifts are replaced by zero before the
sweeps (zero-shift sweeps are harmless).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bidiagonal import BidiagonalMatrix, BidiagonalSVD
from .errors import DegenerateRestart
from .lanczos import LanczosState
from .reorth import OrthoEstimates

_EPS = float(np.finfo(np.float64).eps)

# Relative half-width of the protection interval around the smallest wanted
# Ritz value; shifts landing inside are replaced by zero.
_BAD_SHIFT_RTOL = 1.0e-3


@dataclass
class RestartPlan:
    """Shifts for one restart: the unwanted Ritz values, bad ones zeroed."""

    shifts: np.ndarray
    k: int
    m: int


def select_shifts(svd: BidiagonalSVD, k: int, residual_norm_k: float) -> RestartPlan:
    """Choose the ``m - k`` exact shifts for a restart.

    The shifts are the unwanted Ritz values ``theta_{k+1} >= ... >= theta_m``
    applied largest first.  A shift within ``theta_k * 1e-3`` of
    ``theta_k - ||r_k||`` — the interval where the smallest wanted value
    could actually lie — is replaced by zero so the sweep cannot deflate a
    wanted direction by accident.
    """
    thetas = svd.thetas
    m = thetas.size
    if not 1 <= k < m:
        raise ValueError(f"need 1 <= k < m, got k={k}, m={m}")
    shifts = thetas[k:].copy()
    guard_center = thetas[k - 1] - residual_norm_k
    bad = np.abs(shifts - guard_center) <= thetas[k - 1] * _BAD_SHIFT_RTOL
    shifts[bad] = 0.0
    return RestartPlan(shifts=shifts, k=int(k), m=int(m))


def compact(state: LanczosState, sweeps, k: int, anorm: float) -> LanczosState:
    """Truncate a swept ``m``-step factorization to ``k`` steps, in place.

    ``sweeps`` is the ``(B_tilde, C, D)`` triple from
    :func:`~skeweig.bidiagonal.implicit_qr_sweeps`.  The retained bases are
    ``P_m C[:, :k]`` and ``Q_m D[:, :k]``; the new coupling vector is

        q' = coupling * C[m-1, k-1] * q_{m+1}  +  gtil_k * Q_m D[:, k]

    normalized to become ``q_{k+1}``, its norm stored as the new coupling
    coefficient.  Consumes no matrix-vector products.

    Raises
    ------
    DegenerateRestart
        If ``||q'|| <= n * eps * anorm`` — the restart vector vanished
        (the caller reseeds with a fresh random direction).
    """
    btil, C, D = sweeps
    m = state.j
    if state.breakdown is not None:
        raise ValueError("cannot compact a broken factorization")
    if C.shape != (m, m) or D.shape != (m, m):
        raise ValueError("sweep transforms do not match the factorization order")
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= m, got k={k}, m={m}")
    if k == m:
        return state

    coupling = state.coupling
    ctil_mk = float(C[m - 1, k - 1])
    gtil_k = float(btil.gammas[k - 1])
    q_extra = state._Q[:, m]
    q_prime = (coupling * ctil_mk) * q_extra + gtil_k * (state._Q[:, :m] @ D[:, k])
    beta_new = float(np.linalg.norm(q_prime))
    if beta_new <= state.n * _EPS * anorm:
        raise DegenerateRestart(
            f"restart vector norm {beta_new:.3e} is below the floor "
            f"{state.n * _EPS * anorm:.3e}"
        )

    state._P[:, :k] = state._P[:, :m] @ C[:, :k]
    state._Q[:, :k] = state._Q[:, :m] @ D[:, :k]
    state._Q[:, k] = q_prime / beta_new
    state.betas = [float(b) for b in btil.betas[:k]]
    state.gammas = [float(g) for g in btil.gammas[: k - 1]] + [beta_new]
    state.j = k
    state.q_count = k + 1
    return state


def update_estimates(
    est: OrthoEstimates,
    C: np.ndarray,
    D: np.ndarray,
    k: int,
    coupling: float,
    gtil_k: float,
    beta_new: float,
) -> OrthoEstimates:
    """Transform the orthogonality bounds through a compaction.

    The new bases are linear combinations of the old, so the bound matrices
    follow by congruence — taken entrywise in absolute value, like the step
    recurrences, so they stay upper bounds.  The exact-identity parts of
    ``P^T P`` and ``Q^T Q`` map to the exact identity of the new bases
    (the transform columns are orthonormal) and are carried by the unit
    diagonals, so only the off-diagonal bounds are transformed.  The column
    for the new coupling vector combines the old ``q_{m+1}`` column with the
    ``Q_m D[:, k]`` contribution, inflated by ``eps1`` and scaled by the new
    vector's norm, mirroring a recurrence write.  Out-of-range storage is
    zeroed; per-step scratch and carried index sets refer to pre-restart
    columns and are cleared.
    """
    m = C.shape[0]
    kc = k  # columns retained
    absC = np.abs(C[:, :k])
    absD = np.abs(D[:, :k])
    abs_dnext = np.abs(D[:, k])
    eps1 = est.eps1

    # Off-diagonal bound blocks, symmetrized from the stored upper triangles.
    phi = np.abs(est.Phi[:m, :m])
    phi = np.triu(phi, 1)
    phi = phi + phi.T
    psi_all = np.abs(est.Psi[: m + 1, : m + 1])
    psi_all = np.triu(psi_all, 1)
    psi_all = psi_all + psi_all.T
    psi = psi_all[:m, :m]
    psi_col = psi_all[:m, m]  # bounds against q_{m+1}
    om = np.abs(est.Omega[:m, : m + 1])

    new_phi = absC.T @ phi @ absC
    new_psi = absD.T @ psi @ absD
    new_om = absC.T @ om[:, :m] @ absD

    scale = abs(coupling) * abs(C[m - 1, k - 1])
    psi_next = (absD.T @ (scale * psi_col + gtil_k * (psi @ abs_dnext)) + eps1) / beta_new
    om_next = (absC.T @ (scale * om[:, m] + gtil_k * (om[:, :m] @ abs_dnext)) + eps1) / beta_new

    est.Phi[:, :] = 0.0
    est.Psi[:, :] = 0.0
    est.Omega[:, :] = 0.0
    est.Phi[:kc, :kc] = np.triu(new_phi, 1)
    est.Psi[:kc, :kc] = np.triu(new_psi, 1)
    est.Omega[:kc, :kc] = -new_om
    est.Psi[:kc, kc] = psi_next
    est.Omega[:kc, kc] = -om_next
    idx = np.arange(kc)
    est.Phi[idx, idx] = 1.0
    est.Psi[idx, idx] = 1.0
    est.Psi[kc, kc] = 1.0
    est.clear_transient()
    return est
