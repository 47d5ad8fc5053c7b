"""Lazy random-walk operators and the per-snapshot similarity matrices.

For every snapshot two walks are run for ``k`` steps from every node: a
light lazy walk (LLRW), which keeps ``alpha`` self-loops at each node, and a
degree-biased variant (MLLRW) that mixes in extra probability of staying at
high-degree nodes.  The symmetrized visiting probabilities ``P + P^T`` give
``H`` (LLRW) and ``W`` (MLLRW).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import sparsemat as sm
from .errors import InputError, LinkUnlinkError, NumericalError

#: Maximum row-sum deviation tolerated by :func:`propagate`.
STOCHASTIC_TOL = 1e-6


@dataclass(frozen=True)
class WalkConfig:
    alpha: float = 1.0
    beta: float = 0.01
    k: int = 4

    def __post_init__(self):
        if not self.alpha >= 0:
            raise InputError(f"alpha must be >= 0, got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise InputError(f"beta must lie in [0, 1], got {self.beta}")
        if int(self.k) != self.k or self.k < 1:
            raise InputError(f"k must be a positive integer, got {self.k}")


@dataclass(frozen=True)
class SimilarityPair:
    """``H`` from the LLRW walk and ``W`` from the MLLRW walk of one snapshot."""

    H: object
    W: object


def _check_square(A, what: str) -> None:
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"{what}: expected a square matrix, got {A.shape}")


def llrw_transition(A, alpha: float) -> sp.csr_matrix:
    """Light lazy walk ``(D + alpha I)^{-1} (alpha I + A)``.

    With ``alpha == 0`` this is the plain walk ``D^{-1} A``, which is only
    defined when no node is isolated.  With ``alpha > 0`` an isolated node
    keeps all of its mass.
    """
    _check_square(A, "llrw_transition")
    if alpha < 0:
        raise InputError(f"alpha must be >= 0, got {alpha}")
    A = sm.as_sparse(A)
    n = A.shape[0]
    deg = sm.row_sums(A)
    if alpha == 0 and np.any(deg == 0):
        isolated = np.flatnonzero(deg == 0)
        raise InputError(
            f"alpha=0 needs every node to have an edge; isolated nodes: {isolated[:10].tolist()}"
        )
    inv = sp.diags(1.0 / (deg + alpha))
    lazy = A + alpha * sp.identity(n, format="csr") if alpha else A
    return sm.as_sparse(inv @ lazy)


def degree_centrality(A) -> np.ndarray:
    """Normalized degree ``d_i / (n - 1)``; zero for a single-node graph."""
    deg = sm.row_sums(A)
    n = A.shape[0]
    return deg / (n - 1) if n > 1 else np.zeros_like(deg)


def mllrw_transition(A, alpha: float, beta: float) -> sp.csr_matrix:
    """Degree-biased lazy walk ``beta S + (1 - beta) LLRW``, row-renormalized.

    ``S`` is the diagonal of normalized degree centralities.  Because its
    rows do not sum to one, each row of the mixture is rescaled to restore a
    stochastic matrix.  The only row with zero mass (``beta == 1`` on an
    isolated node) becomes a point mass on the diagonal.
    """
    if not 0.0 <= beta <= 1.0:
        raise InputError(f"beta must lie in [0, 1], got {beta}")
    base = llrw_transition(A, alpha)
    if beta == 0:
        return base
    n = base.shape[0]
    mix = sm.as_sparse(beta * sp.diags(degree_centrality(A)) + (1.0 - beta) * base)
    mass = sm.row_sums(mix)
    empty = mass == 0
    if np.any(empty):
        mix = sm.as_sparse(mix + sp.diags(empty.astype(np.float64)))
        mass = np.where(empty, 1.0, mass)
    return sm.as_sparse(sp.diags(1.0 / mass) @ mix)


def check_stochastic(N_rw, tol: float = STOCHASTIC_TOL) -> None:
    sums = sm.row_sums(N_rw)
    worst = float(np.max(np.abs(sums - 1.0))) if len(sums) else 0.0
    if not worst <= tol:
        raise NumericalError(f"transition matrix is not row-stochastic (max |row sum - 1| = {worst:.3g})")


def propagate(N_rw, k: int, dense_threshold: float = sm.DENSE_THRESHOLD):
    """``k``-step visiting probabilities for walkers started at every node.

    Row ``i`` of the result is the distribution after ``k`` steps of a walker
    started at ``i``; computed as ``k`` repeated products with ``N_rw``.
    Once the running product fills in past ``dense_threshold`` it switches to
    a dense array.
    """
    _check_square(N_rw, "propagate")
    if int(k) != k or k < 1:
        raise InputError(f"k must be a positive integer, got {k}")
    check_stochastic(N_rw)
    step = sm.as_sparse(N_rw)
    P = step
    for _ in range(int(k) - 1):
        P = sm.compact(P, dense_threshold)
        P = sm.spmm(P, step) if sp.issparse(P) else np.asarray((step.T @ P.T).T)
    return sm.compact(P, dense_threshold)


def symmetrize(P):
    """``P + P^T``; exactly symmetric because float addition commutes."""
    _check_square(P, "symmetrize")
    if sp.issparse(P):
        return sm.as_sparse(P + P.T)
    P = np.asarray(P, dtype=np.float64)
    return P + P.T


def similarity_pair(A, cfg: WalkConfig,
                    dense_threshold: float = sm.DENSE_THRESHOLD) -> SimilarityPair:
    H = symmetrize(propagate(llrw_transition(A, cfg.alpha), cfg.k, dense_threshold))
    if cfg.beta == 0:
        return SimilarityPair(H, H)
    W = symmetrize(propagate(mllrw_transition(A, cfg.alpha, cfg.beta), cfg.k, dense_threshold))
    return SimilarityPair(H, W)


def snapshot_similarities(seq, cfg: WalkConfig, threads: int = 1,
                          dense_threshold: float = sm.DENSE_THRESHOLD) -> list[SimilarityPair]:
    """``(H_t, W_t)`` for every snapshot of ``seq``, in order.

    Snapshots are independent, so ``threads > 1`` only changes scheduling,
    never the result.
    """

    def one(t):
        try:
            return similarity_pair(seq.snapshots[t], cfg, dense_threshold)
        except LinkUnlinkError as exc:
            raise type(exc)(f"snapshot {t + 1}: {exc}") from exc

    if threads > 1 and seq.N > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(seq.N)))
    return [one(t) for t in range(seq.N)]
