"""Proximity scores from fitted factors and ranked link / unlink candidates."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import InputError, ShapeError
from .factor import FactorState


@dataclass(frozen=True)
class ScoreMatrix:
    R: np.ndarray
    symmetrized: bool = True


@dataclass(frozen=True)
class RankedPairs:
    """Candidate pairs ``(i[r], j[r])`` with ``i < j`` in ranked order.

    ``direction`` is ``"link"`` (descending score) or ``"unlink"``
    (ascending score).
    """

    i: np.ndarray
    j: np.ndarray
    score: np.ndarray
    direction: str

    def __len__(self) -> int:
        return len(self.i)

    def as_list(self) -> list[tuple[int, int, float]]:
        return list(zip(self.i.tolist(), self.j.tolist(), self.score.tolist()))

    def to_csv(self, path, labels: Sequence[str] = ()) -> None:
        """Write ``i,j,score`` rows, mapping ids back to labels when given."""
        name = (lambda x: labels[x]) if labels else str
        with open(Path(path), "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["i", "j", "score"])
            for a, b, s in self.as_list():
                writer.writerow([name(a), name(b), repr(float(s))])


def _temporal_sum(state: FactorState) -> np.ndarray:
    if not state.V:
        raise InputError("factor state has no temporary matrices")
    total = np.zeros_like(state.V[0])
    for V in state.V:
        total += V
    return total


def score_matrix(state: FactorState) -> ScoreMatrix:
    """``R = sum_t U V_t^T``, averaged with its transpose.

    The transpose average makes ``R[i, j] == R[j, i]`` exactly, which is
    what unordered node pairs require.
    """
    raw = state.U @ _temporal_sum(state).T
    return ScoreMatrix((raw + raw.T) / 2.0, True)


def pair_scores(state: FactorState, pairs) -> np.ndarray:
    """Entries of the symmetrized ``R`` for the given ``(i, j)`` rows only."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    S = _temporal_sum(state)
    U = state.U
    a, b = pairs[:, 0], pairs[:, 1]
    ij = np.einsum("rk,rk->r", U[a], S[b])
    ji = np.einsum("rk,rk->r", U[b], S[a])
    return (ij + ji) / 2.0


def _candidates(R: ScoreMatrix, G_N, want_edge: bool):
    n = R.R.shape[0]
    if R.R.shape != (n, n) or G_N.shape != (n, n):
        raise ShapeError(f"score matrix {R.R.shape} and snapshot {G_N.shape} disagree")
    iu, ju = np.triu_indices(n, k=1)
    if sp.issparse(G_N):
        present = np.asarray(sp.csr_matrix(G_N)[iu, ju]).ravel() != 0
    else:
        present = np.asarray(G_N)[iu, ju] != 0
    keep = present if want_edge else ~present
    return iu[keep], ju[keep], R.R[iu[keep], ju[keep]]


def _rank(i, j, s, descending: bool, top: Optional[int], direction: str) -> RankedPairs:
    key = -s if descending else s
    # lexsort: last key is primary; ties fall back to (i, j)
    order = np.lexsort((j, i, key))
    if top is not None:
        order = order[: max(int(top), 0)]
    return RankedPairs(i[order], j[order], s[order], direction)


def rank_links(R: ScoreMatrix, G_N, top: Optional[int] = None) -> RankedPairs:
    """Unconnected pairs of ``G_N``, most likely to link first."""
    i, j, s = _candidates(R, G_N, want_edge=False)
    return _rank(i, j, s, True, top, "link")


def rank_unlinks(R: ScoreMatrix, G_N, top: Optional[int] = None) -> RankedPairs:
    """Edges of ``G_N``, most likely to disappear (lowest score) first."""
    i, j, s = _candidates(R, G_N, want_edge=True)
    return _rank(i, j, s, False, top, "unlink")
