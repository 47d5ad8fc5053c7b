"""Joint non-negative factorization of a sequence of similarity matrices.

Every snapshot target ``W_t`` is approximated by ``U @ V_t.T`` where ``U``
(shared by all snapshots) captures long-term node relations and ``V_t``
captures snapshot-specific ones.  The objective minimized is

    sum_t w_t ||W_t - U V_t^T||_F^2
      + gamma * sum_t tr(U^T L_t U)
      + lam * sum_{t>=2} w_t ||V_t - V_{t-1}||_F^2

with ``L_t = D_t - H_t`` the Laplacian of the LLRW similarity ``H_t`` and
``w_t = theta ** (N - t)`` in ``theta-weighted`` mode (``w_t = 1`` in the
default ``paper-simplified`` mode).

Both factors are updated multiplicatively with square-root rules
``X <- X * sqrt(neg / pos)`` where ``neg`` and ``pos`` are the negative and
positive parts of the gradient.  This keeps every entry non-negative.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from . import sparsemat as sm
from .errors import InputError, NumericalError, ShapeError
from .randwalk import SimilarityPair

log = logging.getLogger(__name__)

WEIGHTING_MODES = ("paper-simplified", "theta-weighted")
SMOOTHNESS_MODES = ("paper-one-sided", "full-gradient")

#: Above this many nodes the reconstruction error is computed from traces
#: instead of the explicit n x n residual.
EXACT_OBJECTIVE_MAX_NODES = 4000


@dataclass(frozen=True)
class HyperParams:
    """Factorization settings.  ``lam`` is the temporal smoothness weight."""

    m: int = 5
    theta: float = 0.4
    lam: float = 1e-4
    gamma: float = 1.0
    max_iters: int = 100
    rel_tol: float = 1e-4
    seed: int = 0
    weighting_mode: str = "paper-simplified"
    smoothness_mode: str = "paper-one-sided"
    eps: float = sm.EPS

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise InputError(f"m must be a positive integer, got {self.m}")
        if not 0.0 <= self.theta <= 1.0:
            raise InputError(f"theta must lie in [0, 1], got {self.theta}")
        if not self.lam >= 0:
            raise InputError(f"lam must be >= 0, got {self.lam}")
        if not self.gamma >= 0:
            raise InputError(f"gamma must be >= 0, got {self.gamma}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 0:
            raise InputError(f"max_iters must be a non-negative integer, got {self.max_iters}")
        if not self.rel_tol > 0:
            raise InputError(f"rel_tol must be > 0, got {self.rel_tol}")
        if self.weighting_mode not in WEIGHTING_MODES:
            raise InputError(f"weighting_mode must be one of {WEIGHTING_MODES}")
        if self.smoothness_mode not in SMOOTHNESS_MODES:
            raise InputError(f"smoothness_mode must be one of {SMOOTHNESS_MODES}")

    def weights(self, N: int) -> np.ndarray:
        """Per-snapshot weights ``w_1..w_N``."""
        if self.weighting_mode == "paper-simplified":
            return np.ones(N)
        return np.array([self.theta ** (N - t) for t in range(1, N + 1)], dtype=np.float64)


@dataclass(frozen=True)
class FactorState:
    U: np.ndarray
    V: tuple
    objective_trace: tuple = ()
    iters_run: int = 0
    converged: bool = False

    @property
    def N(self) -> int:
        return len(self.V)


@dataclass(frozen=True)
class LaplacianPair:
    L: object
    Dh: sp.csr_matrix


def laplacian(H) -> LaplacianPair:
    Dh = sm.degree_matrix(H)
    if sp.issparse(H):
        return LaplacianPair(sm.as_sparse(Dh - H), Dh)
    return LaplacianPair(Dh.toarray() - np.asarray(H), Dh)


def _check_symmetric(H) -> None:
    if H.shape[0] != H.shape[1]:
        raise ShapeError(f"similarity matrix must be square, got {H.shape}")
    if sp.issparse(H):
        asym = abs(H - H.T).max() if H.nnz else 0.0
    else:
        asym = np.max(np.abs(H - H.T)) if H.size else 0.0
    if asym > 0:
        raise InputError(f"similarity matrix is not symmetric (max |H - H^T| = {asym:.3g})")


def _trace_form(H, U: np.ndarray, deg: Optional[np.ndarray] = None) -> float:
    if deg is None:
        deg = sm.row_sums(H)
    HU = np.asarray(H @ U)
    return float(np.einsum("i,ik,ik->", deg, U, U) - np.einsum("ik,ik->", U, HU))


def pairwise_constraint(H, U: np.ndarray) -> float:
    """``1/2 sum_ij H_ij ||u_i - u_j||^2`` evaluated pair by pair."""
    C = sp.coo_matrix(H)
    diff = U[C.row] - U[C.col]
    return 0.5 * float(np.dot(C.data, np.einsum("ik,ik->i", diff, diff)))


def constraint_term(H, U: np.ndarray, check: bool = False) -> float:
    """Graph-regularization penalty ``tr(U^T L U)`` for similarity ``H``.

    With ``check=True`` the pairwise form is evaluated too and a
    :class:`NumericalError` is raised if the two disagree beyond 1e-9
    (relative to the magnitude of the terms involved).
    """
    _check_symmetric(H)
    if H.shape[0] != U.shape[0]:
        raise ShapeError(f"H is {H.shape} but U has {U.shape[0]} rows")
    value = _trace_form(H, U)
    if check:
        other = pairwise_constraint(H, U)
        scale = max(1.0, abs(value), abs(other))
        if abs(value - other) > 1e-9 * scale:
            raise NumericalError(f"trace form {value!r} != pairwise form {other!r}")
    return value


class _Targets:
    """Per-fit cache of the quantities the updates reuse every iteration."""

    def __init__(self, pairs: Sequence[SimilarityPair], hp: HyperParams):
        if not pairs:
            raise InputError("need at least one snapshot")
        n = pairs[0].W.shape[0]
        for t, p in enumerate(pairs, start=1):
            if p.W.shape != (n, n) or p.H.shape != (n, n):
                raise ShapeError(f"snapshot {t}: similarity matrices must be {n}x{n}")
            for M in (p.W, p.H):
                vals = M.data if sp.issparse(M) else np.asarray(M)
                if not np.all(np.isfinite(vals)):
                    raise NumericalError(f"snapshot {t}: similarity matrix has NaN or infinity")
        self.n = n
        self.N = len(pairs)
        self.W = [p.W for p in pairs]
        self.WT = [p.W.T for p in pairs]
        self.w = hp.weights(self.N)
        if hp.gamma > 0:
            Hs = [p.H for p in pairs]
            if all(sp.issparse(H) for H in Hs):
                self.H_sum = sm.as_sparse(sum(Hs[1:], Hs[0]))
            else:
                self.H_sum = sum((sm.as_dense(H) for H in Hs[1:]), sm.as_dense(Hs[0]))
            self.h_deg = sm.row_sums(self.H_sum)
        else:
            self.H_sum = None
            self.h_deg = None


def _check_state(state: FactorState, n: int, N: int) -> None:
    if state.U.ndim != 2 or state.U.shape[0] != n:
        raise ShapeError(f"U must have {n} rows, got {state.U.shape}")
    if len(state.V) != N:
        raise ShapeError(f"expected {N} temporary matrices, got {len(state.V)}")
    for t, V in enumerate(state.V, start=1):
        if V.shape != state.U.shape:
            raise ShapeError(f"V_{t} has shape {V.shape}, U has {state.U.shape}")


def _residual(W, U, V) -> float:
    if U.shape[0] <= EXACT_OBJECTIVE_MAX_NODES:
        return sm.frobenius_sq_diff(W, U @ V.T)
    return sm.lowrank_residual_sq(W, U, V)


def _objective(tg: _Targets, U, V, hp: HyperParams) -> float:
    total = 0.0
    for t in range(tg.N):
        if tg.w[t] != 0:
            total += tg.w[t] * _residual(tg.W[t], U, V[t])
    if hp.gamma > 0:
        total += hp.gamma * _trace_form(tg.H_sum, U, tg.h_deg)
    if hp.lam > 0:
        for t in range(1, tg.N):
            total += hp.lam * tg.w[t] * sm.frobenius_sq_diff(V[t], V[t - 1])
    return total


def objective(pairs: Sequence[SimilarityPair], state: FactorState, hp: HyperParams) -> float:
    """Value of the (weighted) objective at ``state``."""
    tg = _Targets(pairs, hp)
    _check_state(state, tg.n, tg.N)
    return _objective(tg, state.U, state.V, hp)


def _v_parts(tg: _Targets, t: int, U, V, gram, hp: HyperParams):
    """Negative and positive halves of the gradient w.r.t. ``V_t`` (zero-based ``t``).

    Returns ``None`` when ``V_t`` does not enter the objective at all.
    """
    Vt = V[t]
    wt = tg.w[t]
    forward = hp.smoothness_mode == "full-gradient" and t + 1 < tg.N and hp.lam > 0
    w_next = tg.w[t + 1] if forward else 0.0
    if wt == 0 and w_next == 0:
        return None
    num = wt * np.asarray(tg.WT[t] @ U)
    den = wt * (Vt @ gram)
    if t > 0 and hp.lam > 0:
        num += hp.lam * wt * V[t - 1]
        den += hp.lam * wt * Vt
    if forward:
        num += hp.lam * w_next * V[t + 1]
        den += hp.lam * w_next * Vt
    return num, den


def _update_V(tg: _Targets, t: int, U, V, gram, hp: HyperParams) -> np.ndarray:
    parts = _v_parts(tg, t, U, V, gram, hp)
    if parts is None:
        return V[t].copy()
    num, den = parts
    return V[t] * np.sqrt(num / (den + hp.eps))


def _u_parts(tg: _Targets, U, V, hp: HyperParams):
    num = np.zeros_like(U)
    gram = np.zeros((U.shape[1], U.shape[1]))
    for t in range(tg.N):
        if tg.w[t] == 0:
            continue
        num += tg.w[t] * np.asarray(tg.W[t] @ V[t])
        gram += tg.w[t] * (V[t].T @ V[t])
    den = U @ gram
    if hp.gamma > 0:
        num += hp.gamma * np.asarray(tg.H_sum @ U)
        den += hp.gamma * (tg.h_deg[:, None] * U)
    return num, den


def _update_U(tg: _Targets, U, V, hp: HyperParams) -> np.ndarray:
    num, den = _u_parts(tg, U, V, hp)
    return U * np.sqrt(num / (den + hp.eps))


def update_V(t: int, pairs: Sequence[SimilarityPair], state: FactorState,
             hp: HyperParams) -> np.ndarray:
    """One multiplicative step for ``V_t`` (``t`` is 1-based).

    ``V_t <- V_t * sqrt((W_t^T U + lam V_{t-1}) / (V_t U^T U + lam V_t))``.
    ``V_1`` has no predecessor, so neither smoothness term appears for it.
    In ``full-gradient`` mode the coupling to ``V_{t+1}`` is added as well.
    """
    tg = _Targets(pairs, replace(hp, gamma=0.0))
    _check_state(state, tg.n, tg.N)
    if not 1 <= t <= tg.N:
        raise InputError(f"snapshot index {t} outside 1..{tg.N}")
    U = state.U
    return _update_V(tg, t - 1, U, list(state.V), U.T @ U, hp)


def update_U(pairs: Sequence[SimilarityPair], state: FactorState, hp: HyperParams) -> np.ndarray:
    """One multiplicative step for the global matrix ``U``.

    ``U <- U * sqrt(sum_t (W_t V_t + gamma H_t U) / sum_t (U V_t^T V_t + gamma D_t U))``
    where ``D_t`` holds the row sums of ``H_t``.
    """
    tg = _Targets(pairs, hp)
    _check_state(state, tg.n, tg.N)
    return _update_U(tg, state.U, list(state.V), hp)


def init_state(n: int, N: int, hp: HyperParams) -> FactorState:
    """Seeded uniform ``(0, 1]`` initialization, ``V_1..V_N`` drawn before ``U``."""
    rng = np.random.default_rng(hp.seed)
    V = tuple(1.0 - rng.random((n, hp.m)) for _ in range(N))
    U = 1.0 - rng.random((n, hp.m))
    return FactorState(U, V)


def fit(pairs: Sequence[SimilarityPair], hp: HyperParams,
        init: Optional[FactorState] = None,
        callback: Optional[Callable[[int, FactorState], None]] = None) -> FactorState:
    """Alternate ``V_1..V_N`` (in order) and ``U`` updates until convergence.

    Each sweep updates the temporary matrices Gauss-Seidel style, so ``V_t``
    sees the freshly updated ``V_{t-1}``, then updates ``U``.  The loop stops
    once the relative objective change drops below ``hp.rel_tol`` or after
    ``hp.max_iters`` sweeps.  ``objective_trace[0]`` is the objective at
    the starting point; entry ``i`` is the value after sweep ``i``.

    ``init`` overrides the seeded random start.  ``callback(i, state)`` is
    invoked after every sweep.
    """
    tg = _Targets(pairs, hp)
    if hp.m > tg.n:
        raise InputError(f"m={hp.m} exceeds the number of nodes ({tg.n})")
    state = init if init is not None else init_state(tg.n, tg.N, hp)
    _check_state(state, tg.n, tg.N)

    U = np.array(state.U, dtype=np.float64)
    V = [np.array(v, dtype=np.float64) for v in state.V]
    if np.any(U < 0) or any(np.any(v < 0) for v in V):
        raise InputError("initial factors must be non-negative")

    prev = _objective(tg, U, V, hp)
    trace = [prev]
    converged = False
    it = 0
    while it < hp.max_iters:
        it += 1
        gram = U.T @ U
        for t in range(tg.N):
            V[t] = _update_V(tg, t, U, V, gram, hp)
        U = _update_U(tg, U, V, hp)

        cur = _objective(tg, U, V, hp)
        if not math.isfinite(cur):
            raise NumericalError(f"objective became non-finite at iteration {it}")
        trace.append(cur)
        rel = abs(prev - cur) / max(abs(prev), np.finfo(float).tiny)
        log.info("iter=%d objective=%.12g rel_change=%.6g", it, cur, rel)
        if callback is not None:
            callback(it, FactorState(U.copy(), tuple(v.copy() for v in V), tuple(trace), it, False))
        prev = cur
        if rel < hp.rel_tol:
            converged = True
            break

    return FactorState(U, tuple(V), tuple(trace), it, converged)


def save_state(state: FactorState, directory, hp: Optional[HyperParams] = None,
               extra: Optional[dict] = None) -> None:
    """Dump ``U.tsv``, ``V_<t>.tsv`` and ``metadata.json`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    np.savetxt(directory / "U.tsv", state.U, fmt="%.17g", delimiter="\t")
    for t, V in enumerate(state.V, start=1):
        np.savetxt(directory / f"V_{t}.tsv", V, fmt="%.17g", delimiter="\t")
    meta = {
        "N": state.N,
        "iters_run": state.iters_run,
        "converged": state.converged,
        "objective_trace": [float(x) for x in state.objective_trace],
    }
    if hp is not None:
        meta["hyperparams"] = asdict(hp)
    if extra:
        meta.update(extra)
    with open(directory / "metadata.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_state(directory) -> FactorState:
    directory = Path(directory)
    try:
        with open(directory / "metadata.json") as fh:
            meta = json.load(fh)
        U = np.loadtxt(directory / "U.tsv", delimiter="\t", ndmin=2)
        V = tuple(np.loadtxt(directory / f"V_{t}.tsv", delimiter="\t", ndmin=2)
                  for t in range(1, int(meta["N"]) + 1))
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"{directory}: cannot load factor state ({exc})") from None
    return FactorState(U, V, tuple(meta.get("objective_trace", ())),
                       int(meta.get("iters_run", 0)), bool(meta.get("converged", False)))
