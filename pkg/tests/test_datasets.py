import numpy as np
import scipy.sparse.linalg as spla

from skeweig.datasets import (
    GRID_EDGES,
    GRID_N,
    make_power_grid_like,
    planted_spectrum,
    power_grid_directed,
    random_sparse_skew,
)
from skeweig.oracle import dense_decompose
from skeweig.sparse import SkewSparseMatrix


def test_grid_proxy_shape_and_scale():
    A = make_power_grid_like()
    assert isinstance(A, SkewSparseMatrix)
    assert A.n == GRID_N == 1919
    assert A.nnz == 2 * GRID_EDGES == 9662
    # largest magnitude sits at 1.71 by construction
    smax = spla.svds(A.tocsr(), k=1, return_singular_vectors=False)[0]
    assert abs(smax - 1.71) <= 1e-8


def test_grid_proxy_is_deterministic():
    a = power_grid_directed().tocsr()
    b = power_grid_directed().tocsr()
    np.testing.assert_array_equal(a.indptr, b.indptr)
    np.testing.assert_array_equal(a.indices, b.indices)
    np.testing.assert_array_equal(a.data, b.data)
    # a different seed reshuffles the sparsity pattern
    c = power_grid_directed(seed=8).tocsr()
    assert not np.array_equal(a.indices, c.indices)


def test_grid_directed_graph_is_connected():
    import scipy.sparse.csgraph as csg

    G = power_grid_directed()
    ncomp, _ = csg.connected_components(G.tocsr(), directed=False)
    assert ncomp == 1


def test_planted_spectrum_matches_oracle():
    A, sig = planted_spectrum([4.0, 2.5, 1.0], n=10, seed=9)
    np.testing.assert_array_equal(sig, [4.0, 2.5, 1.0])
    d = dense_decompose(A.toarray())
    np.testing.assert_allclose(d.sigmas, sig, atol=1e-12)
    assert d.null_dim == 4


def test_planted_spectrum_defaults_to_tight_dimension():
    A, sig = planted_spectrum([2.0, 1.0], seed=10)
    assert A.n == 4
    d = dense_decompose(A.toarray())
    np.testing.assert_allclose(d.sigmas, [2.0, 1.0], atol=1e-12)
    assert d.null_dim == 0


def test_random_sparse_skew_structure():
    A = random_sparse_skew(50, 0.1, seed=11)
    dense = A.toarray()
    np.testing.assert_array_equal(dense, -dense.T)
    assert np.abs(np.diag(dense)).max() == 0.0
    assert A.nnz > 0
    # reproducible for a fixed seed
    B = random_sparse_skew(50, 0.1, seed=11)
    np.testing.assert_array_equal(dense, B.toarray())
