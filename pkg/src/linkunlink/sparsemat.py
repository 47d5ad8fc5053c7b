"""Small matrix toolkit used by the rest of the pipeline.

Sparse operands are ``scipy.sparse`` CSR matrices, dense operands are
``numpy`` float64 arrays.  Every helper accepts either layout where it makes
sense, so callers never need to know whether a similarity matrix ended up
dense or sparse after propagation.
"""

from __future__ import annotations

from typing import Union

import numpy as np
import scipy.sparse as sp

from .errors import NumericalError, ShapeError

Matrix = Union[np.ndarray, sp.spmatrix, sp.sparray]

#: Guard added to every multiplicative-update denominator.
EPS = 1e-12

#: Propagated matrices denser than this are stored as dense arrays.
DENSE_THRESHOLD = 0.25


def is_sparse(X) -> bool:
    return sp.issparse(X)


def as_sparse(X) -> sp.csr_matrix:
    """Return a canonical CSR copy: float64, no explicit zeros, no duplicates."""
    out = sp.csr_matrix(X, dtype=np.float64, copy=True)
    out.sum_duplicates()
    out.eliminate_zeros()
    if not np.all(np.isfinite(out.data)):
        raise NumericalError("sparse matrix holds non-finite values")
    return out


def as_dense(X) -> np.ndarray:
    if sp.issparse(X):
        return X.toarray()
    return np.asarray(X, dtype=np.float64)


def density(X) -> float:
    rows, cols = X.shape
    if rows * cols == 0:
        return 0.0
    nnz = X.nnz if sp.issparse(X) else np.count_nonzero(X)
    return nnz / float(rows * cols)


def compact(X, threshold: float = DENSE_THRESHOLD):
    """Pick the storage layout for ``X`` from its fill ratio."""
    if density(X) > threshold:
        return as_dense(X)
    return as_sparse(X)


def _check_same_shape(X, Y, what: str) -> None:
    if X.shape != Y.shape:
        raise ShapeError(f"{what}: shape mismatch {X.shape} vs {Y.shape}")


def spmm(A, B):
    """Matrix product ``A @ B`` with a dimension check.

    Returns a dense array when ``B`` is dense and a CSR matrix when both
    operands are sparse.
    """
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise ShapeError(f"spmm: cannot multiply {A.shape} by {B.shape}")
    if sp.issparse(A) and sp.issparse(B):
        return as_sparse(A @ B)
    if sp.issparse(A) or sp.issparse(B):
        return np.asarray(A @ B)
    return np.asarray(A, dtype=np.float64) @ np.asarray(B, dtype=np.float64)


def elementwise(op: str, X, Y=None, eps: float = EPS):
    """Entrywise ``multiply``, ``divide``, ``add`` or ``sqrt``.

    ``divide`` always adds ``eps`` to the denominator so finite inputs never
    produce NaN or infinity.  ``Y`` may be a scalar for the binary ops.
    """
    if op == "sqrt":
        if sp.issparse(X):
            return as_sparse(X).sqrt()
        return np.sqrt(as_dense(X))
    if op not in ("multiply", "divide", "add"):
        raise ValueError(f"unknown elementwise op {op!r}")
    if Y is None:
        raise ValueError(f"{op} needs a second operand")
    if not np.isscalar(Y):
        _check_same_shape(X, Y, op)
    if op == "multiply":
        if sp.issparse(X):
            return as_sparse(X.multiply(Y))
        if sp.issparse(Y):
            return as_sparse(Y.multiply(X))
        return as_dense(X) * (Y if np.isscalar(Y) else as_dense(Y))
    if op == "add":
        if np.isscalar(Y):
            return as_dense(X) + Y
        if sp.issparse(X) and sp.issparse(Y):
            return as_sparse(X + Y)
        return as_dense(X) + as_dense(Y)
    den = Y if np.isscalar(Y) else as_dense(Y)
    return as_dense(X) / (den + eps)


def row_sums(X) -> np.ndarray:
    return np.asarray(X.sum(axis=1), dtype=np.float64).ravel()


def degree_matrix(A) -> sp.csr_matrix:
    """Diagonal matrix of row sums of a square matrix."""
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError(f"degree_matrix: expected a square matrix, got {A.shape}")
    return sp.diags(row_sums(A), format="csr")


def frobenius_sq_diff(X, Y) -> float:
    """Squared Frobenius norm of ``X - Y``.

    When exactly one operand is sparse the sparse side is never densified:
    the dense operand contributes its full squared norm and the correction
    is applied only on the sparse nonzero pattern.
    """
    _check_same_shape(X, Y, "frobenius_sq_diff")
    xs, ys = sp.issparse(X), sp.issparse(Y)
    if xs and ys:
        D = (X - Y).tocsr()
        return float(np.dot(D.data, D.data))
    if not xs and not ys:
        D = np.asarray(X, dtype=np.float64) - np.asarray(Y, dtype=np.float64)
        return float(np.einsum("ij,ij->", D, D))
    S, M = (X, Y) if xs else (Y, X)
    S = sp.coo_matrix(S)
    S.sum_duplicates()
    M = np.asarray(M, dtype=np.float64)
    base = float(np.einsum("ij,ij->", M, M))
    m_at = M[S.row, S.col]
    diff = S.data - m_at
    return base + float(np.dot(diff, diff) - np.dot(m_at, m_at))


def lowrank_residual_sq(X, U: np.ndarray, V: np.ndarray) -> float:
    """``||X - U V^T||_F^2`` without forming the ``n x n`` product.

    Uses ``||X||^2 - 2 tr(U^T X V) + tr((U^T U)(V^T V))``.  Cheaper for large
    graphs but loses relative precision when the residual is tiny.
    """
    if X.shape != (U.shape[0], V.shape[0]) or U.shape[1] != V.shape[1]:
        raise ShapeError(
            f"lowrank_residual_sq: X {X.shape}, U {U.shape}, V {V.shape}"
        )
    if sp.issparse(X):
        xx = float(X.multiply(X).sum())
    else:
        xx = float(np.einsum("ij,ij->", X, X))
    cross = float(np.einsum("ik,ik->", U, np.asarray(X @ V)))
    gram = float(np.einsum("kl,kl->", U.T @ U, V.T @ V))
    return max(xx - 2.0 * cross + gram, 0.0)
