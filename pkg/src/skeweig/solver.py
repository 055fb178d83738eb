"""Outer solve loop: expansion, convergence testing, restarts, recovery.

The eigenvalues of a real skew-symmetric matrix are the conjugate pairs
``+-i*sigma_j`` with the ``sigma_j`` its singular values, and the
eigenvectors are ``(u_j +- i*v_j)/sqrt(2)`` with ``u_j``/``v_j`` the left and
right singular vectors — so the solver runs entirely in real arithmetic on
the singular value problem and reports each conjugate pair once.

One cycle expands the bidiagonalization to dimension ``m``, takes the SVD of
the small bidiagonal factor, and tests the ``k`` wanted Ritz triplets with
the cheap residual identity ``||r_j|| = coupling * |last entry of c_j| /
sqrt(2)`` — no eigenvector assembly until the test passes.  Unconverged
cycles shrink the factorization back to order ``k`` by implicit QR sweeps
with the unwanted Ritz values as shifts and expand again, at ``2*(m - k)``
matrix-vector products per cycle after the first (which costs ``2*m``).

A right-vector breakdown means the chain closed on an exact invariant
subspace.  When that happens before ``k`` pairs exist (repeated magnitudes
collapse onto a single plane per chain), the exact pairs found so far are
locked and a fresh chain starts orthogonal to them; the complement of an
invariant subspace is itself invariant, so later chains cannot wander back.
A left-vector breakdown instead means the matrix is numerically singular
and the start vector fed part of the null space into the basis, which
caps the attainable accuracy; the solve restarts once from a start vector
pushed through ``A``, which lives in ``range(A)`` and is therefore exactly
null-free.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lanczos
from .bidiagonal import implicit_qr_sweeps, svd as bidiag_svd
from .errors import (
    Breakdown,
    DegenerateRestart,
    InvalidOptions,
    MatrixAllZero,
    ZeroStartVector,
)
from .reorth import OrthoEstimates
from .restart import compact, select_shifts, update_estimates
from .sparse import SkewSparseMatrix

_EPS = float(np.finfo(np.float64).eps)

_REORTH_MODES = ("partial", "full", "none")


@dataclass
class SolverOptions:
    """Knobs for :func:`solve`.

    ``m`` is clamped to ``max(k + 1, min(m, n // 2))`` at solve time: the
    subspace never exceeds half the matrix order (each conjugate pair spans
    two dimensions) but always has room for one unwanted Ritz value.
    """

    k: int = 1
    m: int = 30
    max_restarts: int = 2000
    tol: float = 1.0e-8
    q1: np.ndarray | None = None
    reorth_mode: str = "partial"
    seed: int | None = None

    def validated_m(self, n: int) -> int:
        if self.k < 1:
            raise InvalidOptions(f"k must be >= 1, got {self.k}")
        if 2 * self.k > n:
            raise InvalidOptions(
                f"k={self.k} conjugate pairs need a matrix of order >= {2 * self.k}, "
                f"got {n}"
            )
        if not self.tol > 0.0:
            raise InvalidOptions(f"tol must be positive, got {self.tol}")
        if self.max_restarts < 0:
            raise InvalidOptions(f"max_restarts must be >= 0, got {self.max_restarts}")
        if self.reorth_mode not in _REORTH_MODES:
            raise InvalidOptions(
                f"reorth_mode must be one of {_REORTH_MODES}, got {self.reorth_mode!r}"
            )
        return max(self.k + 1, min(self.m, n // 2))


@dataclass
class RitzTriplet:
    """One approximate singular triplet of ``A`` in factored form.

    ``residual`` is the cheap estimate ``coupling * |c[-1]| / sqrt(2)``,
    which equals the true residual norm of both eigenpair approximations the
    triplet induces.  ``u_tilde``/``v_tilde`` stay ``None`` until assembly.
    """

    theta: float
    c: np.ndarray
    d: np.ndarray
    residual: float
    u_tilde: np.ndarray | None = None
    v_tilde: np.ndarray | None = None


@dataclass
class ConjugateEigenpair:
    """The conjugate eigenpair ``lambda = +-i*sigma``, stored real.

    The eigenvectors are ``x_pm = (u +- i*v)/sqrt(2)``; only the ``+i*sigma``
    representative is reported.
    """

    sigma: float
    u: np.ndarray
    v: np.ndarray


@dataclass
class CycleRecord:
    """One line of the solve trace."""

    cycle: int
    thetas: np.ndarray
    residuals: np.ndarray
    mv_count: int


@dataclass
class SolveResult:
    pairs: list[ConjugateEigenpair]
    mv_count: int
    restarts: int
    converged: bool
    trace: list[CycleRecord] = field(default_factory=list)

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([p.sigma for p in self.pairs])


def solve(A: SkewSparseMatrix, opts: SolverOptions) -> SolveResult:
    """Compute the ``k`` largest conjugate eigenpairs of ``A``.

    Returns a converged result, or a best-effort one (``converged=False``)
    when the restart budget runs out or a breakdown leaves fewer than ``k``
    triplets.  A breakdown of the right-vector norm means the factorization
    closed on an exact invariant subspace: everything found there is exact,
    and if pairs are still missing the search continues on the orthogonal
    complement with a fresh chain (each chain resolves one plane per
    repeated magnitude).  A left-vector breakdown signals numerical
    singularity: the run is restarted once from a start vector multiplied
    by ``A`` (which cannot see the null space); if that chain dies too,
    the best effort so far is returned.

    Raises
    ------
    MatrixAllZero
        Every eigenvalue of the zero matrix is zero; there are no conjugate
        pairs to find.
    InvalidOptions
        Infeasible ``k``/``tol``/``reorth_mode``.
    """
    if not isinstance(A, SkewSparseMatrix):
        raise TypeError("solve expects a SkewSparseMatrix; see skew_symmetrize")
    if A.nnz == 0:
        raise MatrixAllZero("matrix has no nonzero entries")
    n = A.n
    k = opts.k
    m = opts.validated_m(n)
    rng = np.random.default_rng(opts.seed)
    mv_start = A.mv_count

    if opts.q1 is not None:
        q1 = np.asarray(opts.q1, dtype=np.float64)
    else:
        q1 = np.full(n, 1.0 / np.sqrt(n))
    full = opts.reorth_mode == "full"
    est = OrthoEstimates(n, m) if opts.reorth_mode == "partial" else None
    state = lanczos.start(A, q1, m)

    trace: list[CycleRecord] = []
    restarts = 0
    breakdown: Breakdown | None = None
    purged = False  # one null-space purge per solve (see below)
    # Exact pairs from chains that closed on an invariant subspace, with
    # their residuals and the bases later chains must stay orthogonal to.
    locked_pairs: list[ConjugateEigenpair] = []
    locked_res: list[float] = []
    locked_bases: list[np.ndarray] = []

    def merged(extra_pairs, extra_res):
        pairs = locked_pairs + list(extra_pairs)
        res = locked_res + list(extra_res)
        order = sorted(range(len(pairs)), key=lambda i: -pairs[i].sigma)[:k]
        return [pairs[i] for i in order], np.array([res[i] for i in order])

    for cycle in range(opts.max_restarts + 1):
        try:
            while state.j < m:
                lanczos.step(state, A, est=est, full_reorth=full)
        except Breakdown as b:
            breakdown = b
        j = state.j
        k_rem = k - len(locked_pairs)
        if j == 0:
            # the start vector annihilated immediately (it lay in the null
            # space); retry once from inside range(A), else report what the
            # earlier chains locked
            if not purged and cycle < opts.max_restarts:
                purged = True
                try:
                    state = lanczos.start(
                        A, _purged_direction(rng, A, q1, locked_bases), m
                    )
                except ZeroStartVector:
                    pass
                else:
                    if est is not None:
                        est = OrthoEstimates(n, m)
                    breakdown = None
                    restarts += 1
                    continue
            pairs, _ = merged([], [])
            return SolveResult(
                pairs, A.mv_count - mv_start, restarts, len(pairs) == k, trace
            )

        sv = bidiag_svd(state.B)
        coupling = state.coupling
        residuals = coupling * np.abs(sv.C[-1, :]) / np.sqrt(2.0)
        anorm = max(
            est.anorm_est if est is not None else state.anorm_ref,
            float(sv.thetas[0]),
        )
        if est is not None:
            est.absorb_theta(float(sv.thetas[0]))

        # Numerically zero Ritz values approximate the null space, never a
        # conjugate pair; they are excluded from the wanted count.
        valid = np.flatnonzero(sv.thetas > n * _EPS * anorm)
        wanted = valid[:k_rem]
        # trace rows merge locked pairs with the live chain, best k first
        row_sig = np.concatenate([[p.sigma for p in locked_pairs], sv.thetas[wanted]])
        row_res = np.concatenate([locked_res, residuals[wanted]])
        order = np.argsort(-row_sig, kind="stable")[:k]
        row_sig, row_res = row_sig[order], row_res[order]
        trace.append(
            CycleRecord(
                cycle=cycle,
                thetas=row_sig,
                residuals=row_res,
                mv_count=A.mv_count - mv_start,
            )
        )

        bar = anorm * opts.tol
        total = len(locked_pairs) + wanted.size
        done = total == k and bool(np.all(row_res <= bar))
        out_of_budget = cycle == opts.max_restarts

        closed = breakdown is not None and breakdown.which == "gamma"
        if closed and total < k and not out_of_budget:
            # Exact invariant subspace with pairs still missing (repeated
            # magnitudes yield one plane per chain): lock what this chain
            # found and reseed a chain orthogonal to it.
            triplets = _extract(sv, residuals, valid)
            locked_pairs.extend(recover_eigenpairs(triplets, state))
            locked_res.extend(t.residual for t in triplets)
            locked_bases.extend((state.P.copy(), state.Q.copy()))
            try:
                q_next = _fresh_direction(rng, state, locked_bases)
            except ZeroStartVector:
                pairs, _ = merged([], [])
                return SolveResult(
                    pairs, A.mv_count - mv_start, restarts, len(pairs) == k, trace
                )
            state = lanczos.start(A, q_next, m)
            if est is not None:
                est = OrthoEstimates(n, m)
                est.anorm_est = anorm
            breakdown = None
            restarts += 1
            continue

        stuck = (
            breakdown is not None
            and breakdown.which == "beta"
            and not purged
            and not done
            and not out_of_budget
        )
        if stuck:
            # A left-vector annihilation means the matrix is numerically
            # singular and the start vector dragged a null-space component
            # into the basis, capping the attainable accuracy.  The range of
            # a skew-symmetric matrix is the orthogonal complement of its
            # null space, so one multiplication by A scrubs that component;
            # the polluted chain is discarded and restarted clean.
            purged = True
            try:
                q_next = _purged_direction(rng, A, q1, locked_bases)
            except ZeroStartVector:
                pairs, _ = merged([], [])
                return SolveResult(
                    pairs, A.mv_count - mv_start, restarts, len(pairs) == k, trace
                )
            state = lanczos.start(A, q_next, m)
            if est is not None:
                est = OrthoEstimates(n, m)
                est.anorm_est = anorm
            breakdown = None
            restarts += 1
            continue

        if done or breakdown is not None or out_of_budget:
            triplets = _extract(sv, residuals, wanted)
            pairs, _ = merged(recover_eigenpairs(triplets, state), residuals[wanted])
            return SolveResult(
                pairs=pairs,
                mv_count=A.mv_count - mv_start,
                restarts=restarts,
                converged=done,
                trace=trace,
            )

        plan = select_shifts(sv, k_rem, float(residuals[k_rem - 1]))
        sweeps = implicit_qr_sweeps(state.B, plan.shifts)
        coupling_before = state.coupling
        try:
            compact(state, sweeps, k_rem, anorm)
        except DegenerateRestart:
            # The restart vector vanished; reseed with a random direction
            # orthogonal to everything found so far and start over.
            state = lanczos.start(A, _fresh_direction(rng, state, locked_bases), m)
            if est is not None:
                est = OrthoEstimates(n, m)
                est.anorm_est = anorm
        else:
            if est is not None:
                update_estimates(
                    est,
                    sweeps[1],
                    sweeps[2],
                    k_rem,
                    coupling_before,
                    float(sweeps[0].gammas[k_rem - 1]),
                    state.coupling,
                )
        restarts += 1

    raise AssertionError("unreachable: loop returns within the restart budget")


def _extract(sv, residuals, indices) -> list[RitzTriplet]:
    return [
        RitzTriplet(
            theta=float(sv.thetas[i]),
            c=sv.C[:, i].copy(),
            d=sv.D[:, i].copy(),
            residual=float(residuals[i]),
        )
        for i in indices
    ]


def _fresh_direction(rng: np.random.Generator, state, extra=()) -> np.ndarray:
    """Random start vector orthogonal to the current (and locked) bases."""
    blocks = (state.P, state.Q, *extra)
    for _ in range(5):
        v = rng.standard_normal(state.n)
        v = lanczos._block_mgs(v, blocks)
        if float(np.linalg.norm(v)) > np.sqrt(state.n) * _EPS:
            return v
    raise ZeroStartVector("could not draw a direction outside the current bases")


def _purged_direction(rng: np.random.Generator, A, q1, extra=()) -> np.ndarray:
    """Start direction inside ``range(A)``, clear of any locked bases.

    ``range(A)`` is the orthogonal complement of ``null(A)`` for a
    skew-symmetric matrix, so a single multiplication removes the null
    component that caused a left-vector annihilation.  The caller's
    original start vector is tried first to keep the retry deterministic
    even without a seed.
    """
    candidates = [np.asarray(q1, dtype=np.float64)]
    candidates += [rng.standard_normal(A.n) for _ in range(4)]
    for w in candidates:
        v = A @ w
        pre = float(np.linalg.norm(v))
        if pre == 0.0:
            continue
        v = lanczos._block_mgs(v, extra)
        if float(np.linalg.norm(v)) > A.n * _EPS * pre:
            return v
    raise ZeroStartVector("range(A) holds no direction outside the locked bases")


def recover_eigenpairs(triplets: list[RitzTriplet], state) -> list[ConjugateEigenpair]:
    """Assemble ``n``-vector eigenpair representatives from small vectors.

    ``u = P c`` and ``v = Q d`` inherit a small mutual component from the
    semi-orthogonal bases; one symmetric correction splits it evenly and
    re-normalizes, after which ``|u^T v|`` drops to second order.  Fills each
    triplet's ``u_tilde``/``v_tilde`` in place.
    """
    pairs = []
    j = state.j
    P = state.P
    Q = state.Q[:, :j]
    for t in triplets:
        u = P @ t.c
        v = Q @ t.d
        w = float(u @ v) / 2.0
        u, v = u - w * v, v - w * u
        u /= float(np.linalg.norm(u))
        v /= float(np.linalg.norm(v))
        t.u_tilde, t.v_tilde = u, v
        pairs.append(ConjugateEigenpair(sigma=t.theta, u=u, v=v))
    return pairs
