"""Estimator-style front end.

:class:`SkewEigenSolver` wraps :func:`skeweig.solver.solve` in the
scikit-learn parameter/attribute convention (constructor stores
hyper-parameters untouched, ``fit`` computes trailing-underscore
attributes and returns ``self``), so the solver drops into pipelines and
grid searches that only need ``get_params``/``set_params``/``fit``.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator

from .errors import NotSkewSymmetric
from .solver import SolverOptions, solve
from .sparse import SkewSparseMatrix, skew_symmetrize

__all__ = ["SkewEigenSolver"]

_EPS = float(np.finfo(np.float64).eps)


class SkewEigenSolver(BaseEstimator):
    """Largest conjugate eigenpairs of a sparse skew-symmetric matrix.

    Parameters
    ----------
    n_components : int, default=1
        Number of conjugate pairs to compute (``k``): the eigenvalues
        come out as ``+/- 1j * sigmas_[j]``.
    subspace_dim : int, default=30
        Maximum Lanczos subspace dimension per restart cycle.
    tol : float, default=1e-8
        Relative residual tolerance for convergence.
    max_restarts : int, default=2000
        Restart budget before giving up with best-effort results.
    reorth : {'partial', 'full', 'none'}, default='partial'
        Reorthogonalization strategy of the underlying process.
    symmetrize : bool, default=False
        If True, fit on the skew part ``(X - X.T) / 2`` of the input.
        If False, the input must already be skew-symmetric.
    random_state : int or None, default=None
        Seed for the reseeding RNG used after degenerate restarts.

    Attributes
    ----------
    sigmas_ : ndarray of shape (n_components,)
        Magnitudes, descending; eigenvalues are ``+/- 1j * sigmas_``.
    U_, V_ : ndarray of shape (n, n_components)
        Real vector pairs; the eigenvector for ``+1j * sigmas_[j]`` is
        ``(U_[:, j] + 1j * V_[:, j]) / sqrt(2)``.
    residuals_ : ndarray of shape (n_components,)
        Residual norms of the reported pairs.
    converged_ : bool
        Whether every requested pair met the tolerance.
    mv_count_ : int
        Matrix-vector products consumed.
    restarts_ : int
        Implicit restarts performed.
    n_features_in_ : int
        Order of the fitted matrix.

    Examples
    --------
    >>> from skeweig.datasets import random_sparse_skew
    >>> est = SkewEigenSolver(n_components=2, tol=1e-10)
    >>> est.fit(random_sparse_skew(80, 0.2, seed=0))
    SkewEigenSolver(n_components=2, tol=1e-10)
    >>> est.sigmas_.shape
    (2,)
    """

    def __init__(
        self,
        n_components: int = 1,
        subspace_dim: int = 30,
        tol: float = 1e-8,
        max_restarts: int = 2000,
        reorth: str = "partial",
        symmetrize: bool = False,
        random_state: int | None = None,
    ):
        self.n_components = n_components
        self.subspace_dim = subspace_dim
        self.tol = tol
        self.max_restarts = max_restarts
        self.reorth = reorth
        self.symmetrize = symmetrize
        self.random_state = random_state

    def fit(self, X, y=None):
        """Compute the leading conjugate eigenpairs of ``X``.

        Parameters
        ----------
        X : SkewSparseMatrix, scipy sparse, or dense ndarray
            Square matrix; must be skew-symmetric unless
            ``symmetrize=True``.
        y : ignored
            Present for interface compatibility.
        """
        A = self._coerce(X)
        opts = SolverOptions(
            k=self.n_components,
            m=self.subspace_dim,
            tol=self.tol,
            max_restarts=self.max_restarts,
            reorth_mode=self.reorth,
            seed=self.random_state,
        )
        result = solve(A, opts)
        n = A.n
        got = len(result.pairs)
        self.sigmas_ = np.array([p.sigma for p in result.pairs])
        self.U_ = np.zeros((n, got))
        self.V_ = np.zeros((n, got))
        for j, p in enumerate(result.pairs):
            self.U_[:, j] = p.u
            self.V_[:, j] = p.v
        # The final trace record scored exactly the triplets that became
        # the reported pairs, in the same order.
        self.residuals_ = (
            result.trace[-1].residuals[:got].copy()
            if result.trace
            else np.zeros(0)
        )
        self.converged_ = result.converged
        self.mv_count_ = result.mv_count
        self.restarts_ = result.restarts
        self.n_features_in_ = n
        self._result = result
        return self

    def _coerce(self, X) -> SkewSparseMatrix:
        if isinstance(X, SkewSparseMatrix):
            return X
        if sp.issparse(X):
            M = sp.csr_array(X, dtype=np.float64)
        else:
            M = sp.csr_array(np.asarray(X, dtype=np.float64))
        if self.symmetrize:
            return skew_symmetrize(M)
        scale = float(np.abs(M.data).max()) if M.nnz else 0.0
        S = sp.csr_array(M + M.T)
        defect = float(np.abs(S.data).max()) if S.nnz else 0.0
        if scale and defect > 100.0 * _EPS * scale:
            raise NotSkewSymmetric(
                "input is not skew-symmetric; pass symmetrize=True to project"
            )
        return skew_symmetrize(M)  # exact for already-skew input
