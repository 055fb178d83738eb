"""End-to-end acceptance checks for the package.

Each test here exercises one externally observable guarantee at its stated
tolerance, on matrices large or nasty enough to be meaningful.  The unit
suites cover the same components in isolation; this file is the contract.
"""

import time

import numpy as np
from scipy.linalg import subspace_angles

from skeweig import SolverOptions, block_embed, lanczos, solve
from skeweig.bidiagonal import BidiagonalMatrix, implicit_qr_sweeps
from skeweig.bidiagonal import svd as bidiag_svd
from skeweig.datasets import make_power_grid_like, planted_spectrum, random_sparse_skew
from skeweig.errors import Breakdown, DegenerateRestart
from skeweig.oracle import dense_decompose, measure_orthogonality
from skeweig.reorth import OrthoEstimates
from skeweig.restart import compact, select_shifts, update_estimates

_EPS = np.finfo(np.float64).eps


def test_sigmas_and_subspaces_match_dense_oracle_small_scale():
    # 50 random sparse skew matrices, n in [20, 200], density in [0.02, 0.4].
    # The seeded generator also decides size and density, so the exact set of
    # matrices is reproducible.  Only matrices whose fifth spectral gap is
    # resolvable (>= 1e-3 * sigma_1) qualify -- closer pairs are covered by
    # the repeated-magnitude tests instead.
    qualified = 0
    seed = 0
    while qualified < 50:
        seed += 1
        rng = np.random.default_rng(seed)
        n = int(rng.integers(20, 201))
        dens = float(rng.uniform(0.02, 0.4))
        A = random_sparse_skew(n, dens, seed=seed + 1000)
        ref = dense_decompose(A.toarray())
        if ref.sigmas.size < 6:
            continue
        s = ref.sigmas
        if np.min(-np.diff(s[:6])) < 1e-3 * s[0]:
            continue
        qualified += 1
        res = solve(A, SolverOptions(k=5, tol=1e-10, m=30))
        assert res.converged, (seed, n, dens)
        assert np.max(np.abs(res.sigmas - s[:5])) <= 1e-8 * s[0], seed
        for j, pair in enumerate(res.pairs):
            W = np.column_stack([pair.u, pair.v])
            Wr = np.column_stack([ref.U[:, j], ref.V[:, j]])
            angle = float(np.max(subspace_angles(W, Wr)))
            assert angle <= 1e-6, (seed, j, angle)


def _restart_cycles(seed, n, dens, k, m, n_cycles, check):
    """Drive expansion/restart cycles like the solver does, calling
    ``check(tag, state, sv_or_None)`` after every expansion ("expanded")
    and every compaction ("restarted").  Stops early when a restart
    degenerates (everything wanted has converged), which ends a run the
    same way the driver's reseed path would.  Returns the number of
    restarts that were actually performed.
    """
    A = random_sparse_skew(n, dens, seed=seed)
    est = OrthoEstimates(n, m)
    state = lanczos.start(A, np.full(n, 1.0 / np.sqrt(n)), m)
    restarts = 0
    for _ in range(n_cycles):
        while state.j < m:
            lanczos.step(state, A, est=est)
        sv = bidiag_svd(state.B)
        check("expanded", A, state, sv)
        anorm = max(est.anorm_est, float(sv.thetas[0]))
        est.absorb_theta(float(sv.thetas[0]))
        cheap_k = state.coupling * abs(sv.C[-1, k - 1]) / np.sqrt(2.0)
        plan = select_shifts(sv, k, float(cheap_k))
        sweeps = implicit_qr_sweeps(state.B, plan.shifts)
        coupling_before = state.coupling
        try:
            compact(state, sweeps, k, anorm)
        except DegenerateRestart:
            break
        restarts += 1
        check("restarted", A, state, None)
        update_estimates(
            est, sweeps[1], sweeps[2], k,
            coupling_before, float(sweeps[0].gammas[k - 1]), state.coupling,
        )
    return restarts


def test_cheap_residual_equals_assembled_residual_at_every_cycle():
    # The coupling-times-last-row residual formula must agree with the
    # residual of the explicitly assembled Ritz vectors for every one of the
    # m Ritz values, at every cycle, to 1e-10 relative to the matrix norm.
    def make_check(anorm2, Ad):
        def check(tag, A, state, sv):
            if sv is None:
                return
            m = state.j
            cheap = state.coupling * np.abs(sv.C[-1, :]) / np.sqrt(2.0)
            for i in range(m):
                u = state.P @ sv.C[:, i]
                v = state.Q[:, :m] @ sv.D[:, i]
                explicit = np.sqrt(
                    np.linalg.norm(Ad @ u + sv.thetas[i] * v) ** 2
                    + np.linalg.norm(Ad @ v - sv.thetas[i] * u) ** 2
                ) / np.sqrt(2.0)
                assert abs(cheap[i] - explicit) <= 1e-10 * anorm2, (tag, i)
        return check

    for seed, n, dens in ((70, 120, 0.05), (71, 200, 0.03), (72, 80, 0.2), (73, 300, 0.02)):
        A = random_sparse_skew(n, dens, seed=seed)
        anorm2 = np.linalg.norm(A.toarray(), 2)
        _restart_cycles(seed, n, dens, k=4, m=20, n_cycles=8,
                        check=make_check(anorm2, A.tocsr()))


def test_factorization_residuals_hold_through_restarts():
    # Both factorization relations stay satisfied to 1e-10 * ||A|| * sqrt(m),
    # in Frobenius norm, after every expansion and immediately after every
    # compaction.  The compacted checks are the interesting ones: they verify
    # that a restart really produces a valid shorter factorization.
    restarts_seen = 0
    for seed, n, dens in ((70, 120, 0.05), (71, 200, 0.03), (72, 80, 0.2), (73, 300, 0.02)):
        A0 = random_sparse_skew(n, dens, seed=seed)
        anorm2 = np.linalg.norm(A0.toarray(), 2)

        def check(tag, A, state, sv):
            R1, R2 = state.residual_matrices(A)
            bound = 1e-10 * anorm2 * np.sqrt(state.j)
            assert np.linalg.norm(R1) <= bound, tag
            assert np.linalg.norm(R2) <= bound, tag

        restarts_seen += _restart_cycles(seed, n, dens, k=4, m=20,
                                         n_cycles=8, check=check)
    assert restarts_seen >= 8  # the compacted branch was genuinely exercised


def test_biorthogonality_full_and_partial():
    # Full reorthogonalization: machine-level cross orthogonality.
    for seed in (80, 81, 82):
        A = random_sparse_skew(100, 0.1, seed=seed)
        q1 = np.random.default_rng(seed).standard_normal(100)
        state = lanczos.start(A, q1, 30)
        while state.j < 30:
            lanczos.step(state, A, full_reorth=True)
        assert float(np.max(np.abs(state.Q.T @ state.P))) <= 1e-12

    # Partial reorthogonalization: the tracker keeps all three measures
    # (within P, within Q, and across) under twice the trigger threshold
    # after every single step.
    m = 30
    bound = 2.0 * np.sqrt(_EPS / m)
    for seed in (83, 84):
        A = random_sparse_skew(150, 0.05, seed=seed)
        est = OrthoEstimates(150, m)
        state = lanczos.start(A, np.full(150, 1.0 / np.sqrt(150)), m)
        while state.j < m:
            lanczos.step(state, A, est=est)
            meas = measure_orthogonality(state.P, state.Q)
            assert all(v <= bound for v in meas.values()), (seed, state.j, meas)


def test_ghosts_appear_without_cross_orthogonality_tracking():
    # With no reorthogonalization at all, converged directions re-enter the
    # basis and duplicate their Ritz values ("ghosts"), crowding out other
    # wanted ones.  Run the untracked solver for exactly as many cycles as
    # the tracked solver needs to converge and look at what it reports.
    rng = np.random.default_rng(99)
    top10 = np.linspace(10.0, 5.2, 10)              # well separated
    tail = rng.uniform(0.5, 4.5, 140)
    sigmas = np.sort(np.concatenate([top10, tail]))[::-1]
    A, _ = planted_spectrum(sigmas, seed=60)

    tracked = solve(A, SolverOptions(k=10, m=30, tol=1e-8, reorth_mode="partial"))
    assert tracked.converged
    cycles = len(tracked.trace)

    untracked = solve(A, SolverOptions(k=10, m=30, tol=1e-14, reorth_mode="none",
                                       max_restarts=cycles - 1))
    thetas = untracked.trace[-1].thetas
    s1 = sigmas[0]
    duplicated = sum(
        np.count_nonzero(np.abs(thetas - s) <= 1e-8 * s1) >= 2 for s in top10
    )
    missed = sum(np.min(np.abs(thetas - s)) > 1e-3 * s1 for s in top10)
    assert duplicated >= 1
    assert missed >= 1


def test_power_grid_convergence_within_matvec_budget():
    A = make_power_grid_like()
    for k, budget in ((1, 100), (5, 212), (10, 268)):
        t0 = time.perf_counter()
        res = solve(A, SolverOptions(k=k, m=30, tol=1e-8))
        wall = time.perf_counter() - t0
        assert res.converged, k
        assert res.mv_count <= budget, (k, res.mv_count)
        assert wall < 10.0, (k, wall)
        if k == 1:
            assert abs(res.sigmas[0] - 1.71) <= 0.01


def test_breakdown_on_invariant_subspace_is_exact():
    A = block_embed(np.diag([5.0, 4.0, 3.0]))
    # the whole space is invariant, so the right-vector norm must hit zero
    # within three steps no matter where the chain starts
    state = lanczos.start(A, np.random.default_rng(90).standard_normal(6), 6)
    try:
        while state.j < 6:
            lanczos.step(state, A, full_reorth=True)
    except Breakdown as b:
        assert b.which == "gamma"
        assert b.step <= 3
    else:
        raise AssertionError("expected a breakdown on an invariant subspace")

    res = solve(A, SolverOptions(k=3, tol=1e-8))
    assert res.converged
    np.testing.assert_allclose(res.sigmas, [5.0, 4.0, 3.0], rtol=0, atol=1e-12)


def test_extreme_ritz_values_move_monotonically():
    # Within one chain the leading Ritz value can only grow with the
    # subspace and the smallest can only shrink (they interlace)...
    for seed in (85, 86, 87):
        A = random_sparse_skew(130, 0.06, seed=seed)
        anorm2 = np.linalg.norm(A.toarray(), 2)
        slack = 1e-12 * anorm2
        est = OrthoEstimates(130, 25)
        state = lanczos.start(A, np.full(130, 1.0 / np.sqrt(130)), 25)
        top, bottom = -np.inf, np.inf
        while state.j < 25:
            lanczos.step(state, A, est=est)
            sv = bidiag_svd(state.B)
            assert sv.thetas[0] >= top - slack
            assert sv.thetas[-1] <= bottom + slack
            top, bottom = float(sv.thetas[0]), float(sv.thetas[-1])

    # ...and restarting with exact shifts never loses ground on the leading
    # value either: theta_1 is nondecreasing across the whole trace.
    for seed, n in ((41, 150), (61, 150), (62, 160), (63, 170), (64, 180), (65, 140)):
        A = random_sparse_skew(n, 0.05, seed=seed)
        res = solve(A, SolverOptions(k=4, m=12, tol=1e-11, seed=0))
        assert res.converged
        anorm2 = np.linalg.norm(A.toarray(), 2)
        t1 = np.array([rec.thetas[0] for rec in res.trace])
        assert np.all(np.diff(t1) >= -1e-12 * anorm2), seed


def test_bidiagonal_kernel_matches_dense_svd():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        m = int(rng.integers(1, 31))
        B = BidiagonalMatrix(rng.uniform(0.5, 2.0, m), rng.uniform(0.5, 2.0, m - 1))
        sv = bidiag_svd(B)
        ref = np.linalg.svd(B.toarray(), compute_uv=False)
        assert np.max(np.abs(sv.thetas - ref)) <= 1e-12 * ref[0]
        if m < 2:
            continue
        # one sweep with the smallest singular value as a perfect shift:
        # the multiset survives and the last superdiagonal entry deflates
        out, _, _ = implicit_qr_sweeps(B, [float(sv.thetas[-1])])
        after = np.sort(np.linalg.svd(out.toarray(), compute_uv=False))
        assert np.max(np.abs(after - np.sort(ref))) <= 1e-12 * ref[0]
        assert float(out.gammas[-1]) <= 1e-11 * ref[0]
