import numpy as np
import pytest
import scipy.sparse as sp

from linkunlink import sparsemat as sm
from linkunlink.errors import NumericalError, ShapeError

from conftest import random_adjacency


def naive_matmul(A, B):
    A, B = np.asarray(A), np.asarray(B)
    out = np.zeros((A.shape[0], B.shape[1]))
    for i in range(A.shape[0]):
        for j in range(B.shape[1]):
            for k in range(A.shape[1]):
                out[i, j] += A[i, k] * B[k, j]
    return out


def test_spmm_hand_example():
    A = sp.csr_matrix([[0.0, 1.0], [1.0, 0.0]])
    B = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(sm.spmm(A, B), [[3.0, 4.0], [1.0, 2.0]])


def test_spmm_identity_and_zero():
    B = np.arange(6.0).reshape(3, 2)
    np.testing.assert_array_equal(sm.spmm(sp.identity(3, format="csr"), B), B)
    np.testing.assert_array_equal(sm.spmm(sp.csr_matrix((3, 3)), B), np.zeros((3, 2)))


@pytest.mark.parametrize("seed", range(10))
def test_spmm_matches_triple_loop(seed):
    rng = np.random.default_rng(seed)
    n, m, q = rng.integers(1, 50, size=3)
    A = sp.random(n, m, density=0.3, random_state=seed, format="csr")
    B = rng.random((m, q))
    expected = naive_matmul(A.toarray(), B)
    got = sm.spmm(A, B)
    np.testing.assert_allclose(got, expected, rtol=1e-12, atol=1e-14)
    Bs = sp.random(m, q, density=0.4, random_state=seed + 100, format="csr")
    got_s = sm.spmm(A, Bs)
    assert sp.issparse(got_s)
    np.testing.assert_allclose(got_s.toarray(), naive_matmul(A.toarray(), Bs.toarray()),
                               rtol=1e-12, atol=1e-14)


def test_spmm_dimension_mismatch():
    with pytest.raises(ShapeError):
        sm.spmm(sp.identity(3, format="csr"), np.ones((2, 2)))


def test_elementwise_examples():
    X = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(sm.elementwise("multiply", X, np.ones_like(X)), X)
    np.testing.assert_allclose(sm.elementwise("divide", X, X), np.ones_like(X), rtol=1e-9)
    np.testing.assert_array_equal(sm.elementwise("sqrt", np.array([[4.0, 9.0]])), [[2.0, 3.0]])
    np.testing.assert_array_equal(sm.elementwise("add", X, 1.0), X + 1)


def test_elementwise_divide_never_blows_up():
    rng = np.random.default_rng(0)
    X = rng.random((20, 5))
    Y = np.where(rng.random((20, 5)) < 0.5, 0.0, rng.random((20, 5)))
    out = sm.elementwise("divide", X, Y)
    assert np.all(np.isfinite(out))


def test_elementwise_shape_mismatch():
    with pytest.raises(ShapeError):
        sm.elementwise("add", np.ones((2, 2)), np.ones((3, 2)))


def test_degree_matrix(triangle, single_edge):
    np.testing.assert_array_equal(sm.degree_matrix(triangle).toarray(), np.diag([2.0, 2.0, 2.0]))
    np.testing.assert_array_equal(sm.degree_matrix(single_edge).toarray(), np.diag([1.0, 1.0]))
    A = sp.csr_matrix(np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=float))
    assert sm.degree_matrix(A).diagonal()[2] == 0
    with pytest.raises(ShapeError):
        sm.degree_matrix(sp.csr_matrix((2, 3)))


def test_degree_matches_edge_list():
    rng = np.random.default_rng(3)
    A = random_adjacency(30, 0.2, rng)
    upper = sp.triu(A, k=1).tocoo()
    counts = np.bincount(np.concatenate([upper.row, upper.col]), minlength=30)
    np.testing.assert_array_equal(sm.degree_matrix(A).diagonal(), counts)


def test_frobenius_examples():
    X = np.array([[1.0, 2.0]])
    assert sm.frobenius_sq_diff(X, X) == 0
    assert sm.frobenius_sq_diff(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])) == 2
    assert sm.frobenius_sq_diff(np.array([[3.0]]), np.array([[1.0]])) == 4
    with pytest.raises(ShapeError):
        sm.frobenius_sq_diff(np.ones((1, 2)), np.ones((2, 1)))


@pytest.mark.parametrize("seed", range(5))
def test_frobenius_mixed_operands(seed):
    rng = np.random.default_rng(seed)
    S = sp.random(15, 12, density=0.2, random_state=seed, format="csr")
    D = rng.random((15, 12))
    expected = np.sum((S.toarray() - D) ** 2)
    assert sm.frobenius_sq_diff(S, D) == pytest.approx(expected, rel=1e-12)
    assert sm.frobenius_sq_diff(D, S) == pytest.approx(expected, rel=1e-12)
    assert sm.frobenius_sq_diff(S, sp.csr_matrix(D)) == pytest.approx(expected, rel=1e-12)


def test_lowrank_residual_matches_explicit():
    rng = np.random.default_rng(1)
    X, U, V = rng.random((20, 20)), rng.random((20, 3)), rng.random((20, 3))
    assert sm.lowrank_residual_sq(X, U, V) == pytest.approx(np.sum((X - U @ V.T) ** 2), rel=1e-10)


def test_as_sparse_canonical():
    A = sp.coo_matrix(([1.0, 2.0, 0.0], ([0, 0, 1], [1, 1, 0])), shape=(2, 2))
    C = sm.as_sparse(A)
    assert C.nnz == 1 and C[0, 1] == 3.0
    with pytest.raises(NumericalError):
        sm.as_sparse(sp.csr_matrix([[np.nan]]))


def test_compact_picks_layout():
    assert isinstance(sm.compact(np.ones((4, 4))), np.ndarray)
    assert sp.issparse(sm.compact(sp.identity(10, format="csr")))
