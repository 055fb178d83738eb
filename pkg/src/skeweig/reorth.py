"""Loss-of-orthogonality tracking and selective reorthogonalization.

The Lanczos bidiagonalization recurrence loses orthogonality among the left
vectors ``p_i``, among the right vectors ``q_i``, and *between* the two
families.  This module maintains three running estimate matrices

* ``Phi[i, j]``   — bound on ``|p_i^T p_j|``  (upper triangle, unit diagonal),
* ``Psi[i, j]``   — bound on ``|q_i^T q_j|``  (upper triangle, unit diagonal),
* ``Omega[i, j]`` — bound on ``|p_i^T q_j|``, stored non-positive,

propagated step by step through the recurrence coefficients alone (no extra
inner products).  Each new column is a triangle-inequality combination of
the previous bounds, inflated by ``eps1 = eps * sqrt(n) * ||A||_e / 2`` and
divided by the new vector's norm, so it dominates the true inner product in
magnitude.  Whenever a bound crosses ``sqrt(eps / m)`` the offending vectors
are reorthogonalized by modified Gram-Schmidt; pairs made orthogonal by MGS
restart from the roundoff floor, and the same pairs are swept once more at
the following step because the three-term coupling re-injects the removed
components once before the recurrence can see them.

All arrays are preallocated at the maximum subspace dimension; indices are
0-based (vector ``p_1`` of the mathematical recurrence lives in column 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import VectorAnnihilated

_EPS = float(np.finfo(np.float64).eps)

_NO_CARRY = np.empty(0, dtype=np.intp)


def _union(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if len(b) == 0:
        return a
    if len(a) == 0:
        return b
    return np.union1d(a, b)


def _inflated(w, eps1: float):
    """w + sign(w) * eps1 elementwise, with sign(0) taken as +1."""
    w = np.asarray(w, dtype=np.float64)
    return np.where(w >= 0.0, w + eps1, w - eps1)


@dataclass
class IndexSets:
    """0-based column indices selected for reorthogonalization at one step.

    ``p``/``pq`` drive the left phase (new ``p_j`` against P, then Q);
    ``q``/``qp`` drive the right phase (new ``q_{j+1}`` against Q, then P).
    """

    p: np.ndarray
    pq: np.ndarray
    q: np.ndarray
    qp: np.ndarray

    @property
    def left_empty(self) -> bool:
        return len(self.p) == 0 and len(self.pq) == 0

    @property
    def right_empty(self) -> bool:
        return len(self.q) == 0 and len(self.qp) == 0


class OrthoEstimates:
    """Recurrence-propagated orthogonality estimates for one solve.

    Parameters
    ----------
    n : int
        Dimension of the underlying matrix (enters ``eps1``).
    m : int
        Maximum bidiagonalization length; fixes array sizes and the
        reorthogonalization threshold ``sqrt(eps / m)``.
    track_biorth : bool
        When False the cross-family estimates ``Omega`` are frozen at zero,
        so no reorthogonalization between the P and Q families ever
        triggers.  Diagnostic mode only: it reproduces the classical
        ghost-eigenvalue failure that the cross tracking exists to prevent.
    """

    def __init__(self, n: int, m: int, track_biorth: bool = True):
        if m < 1:
            raise ValueError("m must be positive")
        self.n = int(n)
        self.m = int(m)
        self.track_biorth = bool(track_biorth)
        self.threshold = float(np.sqrt(_EPS / self.m))
        self.anorm_est = 0.0
        self.Phi = np.zeros((m, m))
        self.Psi = np.zeros((m + 1, m + 1))
        self.Omega = np.zeros((m, m + 1))
        self.Psi[0, 0] = 1.0
        # Unnormalized per-step scratch: non-negative bounds on the work
        # vector's projections onto the existing columns, kept in sync
        # through MGS so the closing normalization can use the final norm.
        self._pp = np.zeros(m + 1)   # |p_l^T s|
        self._pq = np.zeros(m + 1)   # |q_l^T s|
        self._qq = np.zeros(m + 1)   # |q_l^T t|
        self._qp = np.zeros(m + 1)   # |p_l^T t|
        # Indices that triggered at the previous step.  A triggered pair is
        # reorthogonalized again at the following step: the three-term
        # coupling re-injects the removed components once with undiminished
        # size, which the freshly re-anchored estimates cannot see coming.
        self._carry_p = _NO_CARRY
        self._carry_pq = _NO_CARRY
        self._carry_q = _NO_CARRY
        self._carry_qp = _NO_CARRY

    # -- scale tracking ----------------------------------------------------

    @property
    def eps1(self) -> float:
        """Inflation increment; tracks the current norm estimate."""
        return _EPS * np.sqrt(self.n) * self.anorm_est / 2.0

    @property
    def annihilation_tol(self) -> float:
        """Norm level below which a reorthogonalized vector counts as gone."""
        return self.n * _EPS * self.anorm_est

    def update_anorm_estimate(self, j: int, betas, gammas) -> None:
        """Fold step ``j``'s coefficients into the running ``||A||_e``.

        Called once per completed step, with ``betas[:j]`` and
        ``gammas[:j]`` final.
        """
        b = np.asarray(betas, dtype=np.float64)
        g = np.asarray(gammas, dtype=np.float64)
        if j == 1:
            self.anorm_est = float(np.hypot(b[0], g[0]))
            return
        jc = j - 1
        g_prev2 = g[jc - 2] if j >= 3 else 0.0
        cand1 = np.sqrt(
            b[jc - 1] ** 2 + g[jc - 1] ** 2 + g[jc - 1] * b[jc] + g_prev2 * b[jc - 1]
        )
        cand2 = np.sqrt(b[jc] ** 2 + g[jc] ** 2 + g[jc - 1] * b[jc])
        self.anorm_est = float(max(self.anorm_est, cand1, cand2))

    def absorb_theta(self, theta1: float) -> None:
        """After a restart the largest Ritz value is a sharper lower bound."""
        self.anorm_est = float(max(self.anorm_est, theta1))

    # -- estimate recurrences ----------------------------------------------

    def update_phi_omega_row(self, j: int, betas, gammas) -> None:
        """Estimates for the incoming ``p_j``: column ``j`` of Phi, row ``j``
        of Omega.

        Expects ``betas[j-1]`` to hold the provisional (pre-reorth) norm of
        the work vector; the recurrences themselves only read earlier
        coefficients, so the provisional value enters through the
        normalization alone.

        The combination is taken term-by-term in absolute value (a triangle
        inequality on the exact identity for ``p_l^T s_j``): magnitudes of
        signed estimates drift relative to the true values they bound, so a
        signed combination can cancel where the truth adds and silently lose
        domination.  The one exception is the pair of unit-diagonal terms at
        ``i = j-1``, which cancels exactly and is dropped rather than summed.
        """
        jc = j - 1
        b = np.asarray(betas, dtype=np.float64)
        g = np.asarray(gammas, dtype=np.float64)
        beta_prov = b[jc]
        if j == 1 and self.anorm_est == 0.0:
            self.anorm_est = float(beta_prov)  # bootstrap before gamma_1 exists
        pp = self._pp[:jc]
        if jc:
            i = np.arange(jc)
            pp[:] = (
                b[i] * np.abs(self.Psi[i, jc])
                + g[i] * np.abs(self.Psi[i + 1, jc])
                + g[jc - 1] * np.abs(self.Phi[i, jc - 1])
            )
            # psi_{j,j} and phi_{j-1,j-1} are exact ones; their contributions
            # cancel exactly in the underlying identity.
            pp[jc - 1] = b[jc - 1] * abs(self.Psi[jc - 1, jc])
        pq = self._pq[:j]
        if self.track_biorth:
            i = np.arange(j)
            w = b[i] * np.abs(self.Omega[i, jc])
            if jc:
                w[1:] += g[i[1:] - 1] * np.abs(self.Omega[i[1:] - 1, jc])
                w += g[jc - 1] * np.abs(self.Omega[jc - 1, i])
            pq[:] = w
        else:
            pq[:] = 0.0
        self._write_left(j, float(beta_prov))

    def update_psi_omega_col(self, j: int, betas, gammas) -> None:
        """Estimates for the incoming ``q_{j+1}``: column ``j+1`` of Psi and
        of Omega.  Expects ``gammas[j-1]`` provisional.

        Same magnitude-bound combination as the row update; the exact
        unit-diagonal cancellation here sits at ``i = j``.
        """
        jc = j - 1
        b = np.asarray(betas, dtype=np.float64)
        g = np.asarray(gammas, dtype=np.float64)
        gamma_prov = g[jc]
        i = np.arange(j)
        qq = self._qq[:j]
        qq[:] = b[i] * np.abs(self.Phi[i, jc]) + b[jc] * np.abs(self.Psi[i, jc])
        if jc:
            qq[1:] += g[i[1:] - 1] * np.abs(self.Phi[i[1:] - 1, jc])
        # phi_{j,j} and psi_{j,j} are exact ones; their contributions cancel.
        qq[jc] = g[jc - 1] * abs(self.Phi[jc - 1, jc]) if jc else 0.0
        qp = self._qp[:j]
        if self.track_biorth:
            qp[:] = (
                g[i] * np.abs(self.Omega[jc, i + 1])
                + b[i] * np.abs(self.Omega[jc, i])
                + b[jc] * np.abs(self.Omega[i, jc])
            )
        else:
            qp[:] = 0.0
        self._write_right(j, float(gamma_prov))

    def _write_left(self, j: int, beta: float) -> None:
        jc = j - 1
        eps1 = self.eps1
        if jc:
            self.Phi[:jc, jc] = _inflated(self._pp[:jc], eps1) / beta
        self.Phi[jc, jc] = 1.0
        if self.track_biorth:
            # Cross-family estimates are stored with a negative sign (the
            # magnitude is what matters; the convention makes the first
            # entry come out as -eps1/beta_1 exactly).
            self.Omega[jc, :j] = -_inflated(self._pq[:j], eps1) / beta

    def _write_right(self, j: int, gamma: float) -> None:
        jc = j - 1
        eps1 = self.eps1
        self.Psi[:j, jc + 1] = _inflated(self._qq[:j], eps1) / gamma
        self.Psi[jc + 1, jc + 1] = 1.0
        if self.track_biorth:
            self.Omega[:j, jc + 1] = -_inflated(self._qp[:j], eps1) / gamma

    # -- selection and reorthogonalization -----------------------------------

    def index_sets(self, j: int) -> IndexSets:
        """Columns whose estimates against the step-``j`` work vectors cross
        the threshold."""
        jc = j - 1
        thr = self.threshold
        i_p = np.flatnonzero(np.abs(self.Phi[:jc, jc]) >= thr)
        i_pq = np.flatnonzero(np.abs(self.Omega[jc, :j]) >= thr)
        i_q = np.flatnonzero(np.abs(self.Psi[:j, jc + 1]) >= thr)
        i_qp = np.flatnonzero(np.abs(self.Omega[:j, jc + 1]) >= thr)
        return IndexSets(p=i_p, pq=i_pq, q=i_q, qp=i_qp)

    def reorthogonalize_left(self, s, P, Q, j: int, sets: IndexSets):
        """MGS the unnormalized ``s`` against the selected P then Q columns.

        The columns actually used are the current threshold sets unioned
        with whatever triggered at the previous step (one-step carry).
        Raises :class:`VectorAnnihilated` if ``s`` is consumed entirely.
        """
        use_p = _union(sets.p, self._carry_p[self._carry_p < j - 1])
        use_pq = _union(sets.pq, self._carry_pq[self._carry_pq < j])
        self._carry_p, self._carry_pq = sets.p, sets.pq
        if len(use_p) == 0 and len(use_pq) == 0:
            return s
        jc = j - 1
        norm_before = float(np.linalg.norm(s))
        for _ in range(2):
            for i in use_p:
                tau = float(P[:, i] @ s)
                s -= tau * P[:, i]
                # Each projection can move at most |tau| * (pair estimate)
                # worth of component onto any other column; the bounds grow
                # by that much (triangle inequality again).
                if jc:
                    self._pp[:jc] += abs(tau) * np.abs(self._phi_sym(i, jc))
                if self.track_biorth:
                    self._pq[:j] += abs(tau) * np.abs(self.Omega[i, :j])
            for i in use_pq:
                tau = float(Q[:, i] @ s)
                s -= tau * Q[:, i]
                if jc and self.track_biorth:
                    self._pp[:jc] += abs(tau) * np.abs(self.Omega[:jc, i])
                self._pq[:j] += abs(tau) * np.abs(self._psi_sym(i, j))
            norm_after = float(np.linalg.norm(s))
            if norm_after > norm_before / np.sqrt(2.0):
                break
            norm_before = norm_after  # heavy cancellation: one repeat pass
        # The pairs just orthogonalized are now orthogonal by construction;
        # their running estimates restart from the roundoff floor.  Without
        # this re-anchoring a triggered estimate can never drop back below
        # the threshold (tau is the true inner product, far below the bound)
        # and the recurrences compound it exponentially.
        self._pp[use_p] = 0.0
        self._pq[use_pq] = 0.0
        if float(np.linalg.norm(s)) <= self.annihilation_tol:
            raise VectorAnnihilated(
                f"left vector at step {j} vanished under reorthogonalization"
            )
        return s

    def reorthogonalize_right(self, t, P, Q, j: int, sets: IndexSets):
        """MGS the unnormalized ``t`` against the selected Q then P columns.

        Same carry and re-anchoring behavior as the left phase.
        """
        use_q = _union(sets.q, self._carry_q[self._carry_q < j])
        use_qp = _union(sets.qp, self._carry_qp[self._carry_qp < j])
        self._carry_q, self._carry_qp = sets.q, sets.qp
        if len(use_q) == 0 and len(use_qp) == 0:
            return t
        norm_before = float(np.linalg.norm(t))
        for _ in range(2):
            for i in use_q:
                tau = float(Q[:, i] @ t)
                t -= tau * Q[:, i]
                self._qq[:j] += abs(tau) * np.abs(self._psi_sym(i, j))
                if self.track_biorth:
                    self._qp[:j] += abs(tau) * np.abs(self.Omega[:j, i])
            for i in use_qp:
                tau = float(P[:, i] @ t)
                t -= tau * P[:, i]
                self._qp[:j] += abs(tau) * np.abs(self._phi_sym(i, j))
                if self.track_biorth:
                    self._qq[:j] += abs(tau) * np.abs(self.Omega[i, :j])
            norm_after = float(np.linalg.norm(t))
            if norm_after > norm_before / np.sqrt(2.0):
                break
            norm_before = norm_after
        self._qq[use_q] = 0.0
        self._qp[use_qp] = 0.0
        if float(np.linalg.norm(t)) <= self.annihilation_tol:
            raise VectorAnnihilated(
                f"right vector at step {j} vanished under reorthogonalization"
            )
        return t

    def clear_transient(self) -> None:
        """Drop per-step scratch and carried index sets.

        Called after a restart compaction: the carried indices refer to
        pre-restart columns and the scratch belongs to an abandoned step.
        """
        self._pp[:] = 0.0
        self._pq[:] = 0.0
        self._qq[:] = 0.0
        self._qp[:] = 0.0
        self._carry_p = _NO_CARRY
        self._carry_pq = _NO_CARRY
        self._carry_q = _NO_CARRY
        self._carry_qp = _NO_CARRY

    def finalize_left(self, j: int, beta: float) -> None:
        """Re-normalize column ``j`` estimates with the final ``beta_j``."""
        self._write_left(j, beta)

    def finalize_right(self, j: int, gamma: float) -> None:
        """Re-normalize column ``j+1`` estimates with the final ``gamma_j``."""
        self._write_right(j, gamma)

    # -- helpers -------------------------------------------------------------

    def _phi_sym(self, i: int, upto: int):
        """Phi[l, i] for l < upto, reading the stored upper triangle
        symmetrically."""
        l = np.arange(upto)
        return self.Phi[np.minimum(l, i), np.maximum(l, i)]

    def _psi_sym(self, i: int, upto: int):
        l = np.arange(upto)
        return self.Psi[np.minimum(l, i), np.maximum(l, i)]

    def trace_stats(self, j: int):
        """(max|phi|, max|psi|, max|omega|) over the off-diagonal region
        populated after step ``j`` completes."""
        phi_max = float(np.abs(np.triu(self.Phi[:j, :j], 1)).max()) if j > 1 else 0.0
        psi_max = float(np.abs(np.triu(self.Psi[: j + 1, : j + 1], 1)).max())
        omega_max = float(np.abs(self.Omega[:j, : j + 1]).max())
        return phi_max, psi_max, omega_max
