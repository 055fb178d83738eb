import numpy as np
import pytest
import scipy.sparse as sp
from sklearn.base import clone

from skeweig.datasets import planted_spectrum, random_sparse_skew
from skeweig.errors import NotSkewSymmetric
from skeweig.estimator import SkewEigenSolver
from skeweig.oracle import dense_decompose


def test_params_survive_clone():
    est = SkewEigenSolver(
        n_components=3,
        subspace_dim=12,
        tol=1e-9,
        max_restarts=50,
        reorth="full",
        symmetrize=True,
        random_state=7,
    )
    dup = clone(est)
    assert dup.get_params() == est.get_params()
    assert dup.get_params()["n_components"] == 3
    est.set_params(tol=1e-6)
    assert est.tol == 1e-6 and dup.tol == 1e-9


def test_fit_computes_leading_pairs():
    A = random_sparse_skew(120, 0.05, seed=20)
    est = SkewEigenSolver(n_components=3, subspace_dim=12, tol=1e-9)
    assert est.fit(A) is est
    assert est.converged_
    assert est.n_features_in_ == 120
    assert est.sigmas_.shape == (3,)
    assert np.all(np.diff(est.sigmas_) < 0)
    assert est.U_.shape == (120, 3) and est.V_.shape == (120, 3)
    assert est.residuals_.shape == (3,)
    assert np.all(est.residuals_ <= 2.0 * 1e-9 * est.sigmas_[0])
    assert est.mv_count_ > 0 and est.restarts_ >= 0
    # fitted vectors satisfy the real-block eigen equations
    Ad = A.tocsr()
    for j in range(3):
        s = est.sigmas_[j]
        assert np.linalg.norm(Ad @ est.U_[:, j] + s * est.V_[:, j]) <= 1e-6 * s
        assert np.linalg.norm(Ad @ est.V_[:, j] - s * est.U_[:, j]) <= 1e-6 * s


def test_fit_agrees_with_dense_oracle():
    A, sig = planted_spectrum([5.0, 3.0, 2.0, 1.0], seed=21)
    est = SkewEigenSolver(n_components=2, tol=1e-12).fit(A)
    ref = dense_decompose(A.toarray())
    np.testing.assert_allclose(est.sigmas_, ref.sigmas[:2], atol=1e-10)


def test_scipy_and_dense_inputs_are_accepted():
    A = random_sparse_skew(60, 0.1, seed=22)
    csr = A.tocsr()
    e1 = SkewEigenSolver(n_components=2, tol=1e-10).fit(csr)
    e2 = SkewEigenSolver(n_components=2, tol=1e-10).fit(csr.toarray())
    e3 = SkewEigenSolver(n_components=2, tol=1e-10).fit(A)
    np.testing.assert_array_equal(e1.sigmas_, e2.sigmas_)
    np.testing.assert_array_equal(e1.sigmas_, e3.sigmas_)


def test_non_skew_input_is_rejected_unless_symmetrized():
    rng = np.random.default_rng(23)
    M = sp.csr_array(rng.standard_normal((40, 40)))
    with pytest.raises(NotSkewSymmetric):
        SkewEigenSolver(n_components=1).fit(M)
    est = SkewEigenSolver(n_components=2, tol=1e-10, symmetrize=True).fit(M)
    skew = (M.toarray() - M.toarray().T) / 2
    ref = dense_decompose(skew)
    np.testing.assert_allclose(est.sigmas_, ref.sigmas[:2], atol=1e-8 * ref.sigmas[0])


def test_unfitted_estimator_has_no_results():
    est = SkewEigenSolver()
    assert not hasattr(est, "sigmas_")
    assert not hasattr(est, "n_features_in_")
