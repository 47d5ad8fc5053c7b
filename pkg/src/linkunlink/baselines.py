"""Static reference predictors: Adamic-Adar and decayed common neighbours.

Both are static methods.  For link prediction they see the union of all
training snapshots; for unlink prediction only the last training snapshot
(see :func:`static_context`).  The decayed common-neighbour score is a
direct reading of "common neighbours with exponential time decay", not a
reimplementation of any particular published variant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import sparsemat as sm
from .errors import InputError
from .netio import SnapshotSequence


@dataclass(frozen=True)
class StaticContext:
    aggregate: sp.csr_matrix


def static_context(train: SnapshotSequence, task: str) -> StaticContext:
    if task == "link":
        total = sum(train.snapshots[1:], train.snapshots[0])
        agg = sm.as_sparse(total)
        agg.data[:] = 1.0
        return StaticContext(agg)
    if task == "unlink":
        return StaticContext(sm.as_sparse(train.snapshots[-1]))
    raise InputError(f"unknown task {task!r}")


def _aa_weights(A) -> np.ndarray:
    deg = sm.row_sums(A)
    w = np.zeros_like(deg)
    ok = deg > 1
    w[ok] = 1.0 / np.log(deg[ok])
    return w


def adamic_adar(ctx: StaticContext, i: int, j: int) -> float:
    """Sum of ``1 / log(d_z)`` over common neighbours ``z``; degree-1 nodes add 0."""
    A = ctx.aggregate
    common = np.intersect1d(A[i].indices, A[j].indices)
    total = 0.0
    for z in common:
        d = A.indptr[z + 1] - A.indptr[z]
        if d > 1:
            total += 1.0 / math.log(d)
    return total


def adamic_adar_scores(ctx: StaticContext, pairs) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    A = ctx.aggregate
    Aw = sm.as_sparse(A @ sp.diags(_aa_weights(A)))
    prod = A[pairs[:, 0]].multiply(Aw[pairs[:, 1]])
    return np.asarray(prod.sum(axis=1)).ravel()


def decayed_common_neighbors(seq: SnapshotSequence, theta: float, i: int, j: int) -> float:
    """``sum_t theta^(T - t) |N_t(i) & N_t(j)|`` over the ``T`` snapshots of ``seq``."""
    if not 0.0 <= theta <= 1.0:
        raise InputError(f"theta must lie in [0, 1], got {theta}")
    T = seq.N
    total = 0.0
    for t, A in enumerate(seq.snapshots, start=1):
        cn = len(np.intersect1d(A[i].indices, A[j].indices))
        total += theta ** (T - t) * cn
    return total


def dcn_scores(seq: SnapshotSequence, theta: float, pairs) -> np.ndarray:
    if not 0.0 <= theta <= 1.0:
        raise InputError(f"theta must lie in [0, 1], got {theta}")
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    T = seq.N
    out = np.zeros(len(pairs))
    for t, A in enumerate(seq.snapshots, start=1):
        cn = np.asarray(A[pairs[:, 0]].multiply(A[pairs[:, 1]]).sum(axis=1)).ravel()
        out += theta ** (T - t) * cn
    return out


def aa_predictor(train: SnapshotSequence, task: str, seed=None):
    ctx = static_context(train, task)
    return lambda pairs: adamic_adar_scores(ctx, pairs)


def make_dcn_predictor(theta: float = 0.4):
    """DCN scorer factory.

    Link prediction decays over all training snapshots; unlink prediction
    uses the last training snapshot alone, per the static-method protocol.
    """

    def predictor(train: SnapshotSequence, task: str, seed=None):
        if task == "link":
            ctx_seq = train
        elif task == "unlink":
            ctx_seq = train[-1:]
        else:
            raise InputError(f"unknown task {task!r}")
        return lambda pairs: dcn_scores(ctx_seq, theta, pairs)

    return predictor
