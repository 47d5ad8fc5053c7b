"""Train/test protocol, balanced negative sampling, AUC and AP.

Snapshots ``G_1..G_{N-1}`` are the training data and ``G_N`` the test
snapshot.  For link prediction the positives are edges new in ``G_N`` and
the negatives are sampled from pairs absent from both ``G_{N-1}`` and
``G_N``.  For unlink prediction the positives are edges of ``G_{N-1}`` that
persist into ``G_N`` and the negatives are the ones that disappear.  In
both tasks a higher predictor score means "more likely positive".

A *predictor* is a callable ``predictor(train, task, seed)`` returning a
scorer ``scorer(pairs) -> scores`` for an ``(k, 2)`` array of node pairs.
``seed`` is ``None`` unless training is repeated per trial.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InputError, NumericalError
from .netio import SnapshotSequence

TASKS = ("link", "unlink")

#: Pair universes up to this size are enumerated when sampling negatives.
ENUMERATE_MAX_PAIRS = 5_000_000

Scorer = Callable[[np.ndarray], np.ndarray]
Predictor = Callable[[SnapshotSequence, str, Optional[int]], Scorer]


@dataclass(frozen=True)
class EvalSplit:
    train: SnapshotSequence
    test_positives: np.ndarray
    test_negatives: np.ndarray
    task: str
    sample_seed: int


@dataclass
class MetricReport:
    auc: float
    ap: float
    n_comparisons: int
    trials: int
    per_trial: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "auc": self.auc,
            "ap": self.ap,
            "n_comparisons": self.n_comparisons,
            "trials": self.trials,
            "per_trial": [{"auc": a, "ap": p} for a, p in self.per_trial],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def csv_row(self, dataset: str, task: str, method: str, seed: int) -> list:
        return [dataset, task, method, repr(self.auc), repr(self.ap), self.trials, seed]


CSV_HEADER = ["dataset", "task", "method", "auc", "ap", "trials", "seed"]


def _sorted_pairs(pairs) -> np.ndarray:
    arr = np.asarray(sorted(pairs), dtype=np.int64).reshape(-1, 2)
    return arr


def _subsample(pairs: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    if len(pairs) == k:
        return pairs
    pick = np.sort(rng.choice(len(pairs), size=k, replace=False))
    return pairs[pick]


def _sample_absent(n: int, blocked: set, k: int, rng: np.random.Generator) -> np.ndarray:
    total = n * (n - 1) // 2
    pool_size = total - len(blocked)
    if pool_size < k:
        raise InputError(f"negative pool has {pool_size} pairs, need {k}")
    if total <= ENUMERATE_MAX_PAIRS:
        iu, ju = np.triu_indices(n, k=1)
        keep = np.ones(len(iu), dtype=bool)
        if blocked:
            b = np.asarray(sorted(blocked), dtype=np.int64)
            # position of (i, j), i < j, in row-major upper-triangle order
            pos = b[:, 0] * n - b[:, 0] * (b[:, 0] + 1) // 2 + (b[:, 1] - b[:, 0] - 1)
            keep[pos] = False
        pool = np.column_stack([iu[keep], ju[keep]])
        return _subsample(pool, k, rng)
    chosen: set = set()
    while len(chosen) < k:
        a = rng.integers(0, n, size=2 * (k - len(chosen)) + 16)
        b = rng.integers(0, n, size=len(a))
        for x, y in zip(a.tolist(), b.tolist()):
            if x == y:
                continue
            pair = (min(x, y), max(x, y))
            if pair not in blocked and pair not in chosen:
                chosen.add(pair)
                if len(chosen) == k:
                    break
    return _sorted_pairs(chosen)


def make_split(seq: SnapshotSequence, task: str, seed: int) -> EvalSplit:
    """Positive and balanced negative test pairs for ``task``.

    Pairs are returned as ``(k, 2)`` arrays with ``i < j``, sorted
    lexicographically.  Sampling depends only on ``seed``.
    """
    if task not in TASKS:
        raise InputError(f"unknown task {task!r}; expected one of {TASKS}")
    if seq.N < 2:
        raise InputError("need at least two snapshots to evaluate")
    rng = np.random.default_rng(seed)
    prev, last = seq.edge_set(seq.N - 2), seq.edge_set(seq.N - 1)

    if task == "link":
        pos = _sorted_pairs(last - prev)
        if len(pos) == 0:
            raise InputError("no evaluable events: G_N has no new edges")
        neg = _sample_absent(seq.node_count, prev | last, len(pos), rng)
    else:
        pos = _sorted_pairs(prev & last)
        neg = _sorted_pairs(prev - last)
        if len(pos) == 0:
            raise InputError("no evaluable events: no edge persists into G_N")
        if len(neg) == 0:
            raise InputError("no evaluable events: no edge disappears in G_N")
        k = min(len(pos), len(neg))
        pos, neg = _subsample(pos, k, rng), _subsample(neg, k, rng)
    return EvalSplit(seq[:-1], pos, neg, task, seed)


def _scores(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise InputError(f"{what} scores are empty")
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"{what} scores contain NaN or infinity")
    return arr


def auc(pos_scores, neg_scores) -> tuple[float, int, int, int]:
    """``(n' + 0.5 n'') / n`` over all positive/negative comparisons.

    ``n'`` counts positives scored strictly above a negative and ``n''``
    exact ties.  Counts are obtained by binary search on the sorted
    negatives, which gives the same integers as the full double loop.
    Returns ``(auc, n, n', n'')``.
    """
    pos = _scores(pos_scores, "positive")
    neg = np.sort(_scores(neg_scores, "negative"))
    below = np.searchsorted(neg, pos, side="left")
    upto = np.searchsorted(neg, pos, side="right")
    n = pos.size * neg.size
    n_gt = int(below.sum())
    n_eq = int((upto - below).sum())
    return (n_gt + 0.5 * n_eq) / n, n, n_gt, n_eq


def average_precision(labels_ranked) -> float:
    """Mean of precision@rank taken at every positive of a ranked list."""
    labels = np.asarray(labels_ranked, dtype=bool).ravel()
    if not labels.any():
        raise InputError("average precision needs at least one positive")
    ranks = np.flatnonzero(labels) + 1
    hits = np.arange(1, len(ranks) + 1)
    return float(np.mean(hits / ranks))


def rank_labels(pos_pairs, pos_scores, neg_pairs, neg_scores) -> np.ndarray:
    """Class labels ordered by descending score, ties broken by ``(i, j)``."""
    pairs = np.vstack([np.asarray(pos_pairs).reshape(-1, 2), np.asarray(neg_pairs).reshape(-1, 2)])
    scores = np.concatenate([_scores(pos_scores, "positive"), _scores(neg_scores, "negative")])
    labels = np.concatenate([np.ones(len(pos_pairs), bool), np.zeros(len(neg_pairs), bool)])
    order = np.lexsort((pairs[:, 1], pairs[:, 0], -scores))
    return labels[order]


def split_metrics(split: EvalSplit, scorer: Scorer) -> tuple[float, float, int]:
    ps = scorer(split.test_positives)
    ns = scorer(split.test_negatives)
    a, n, _, _ = auc(ps, ns)
    ap = average_precision(rank_labels(split.test_positives, ps, split.test_negatives, ns))
    return a, ap, n


def evaluate(seq: SnapshotSequence, predictor: Predictor, task: str,
             trials: int = 5, base_seed: int = 0,
             retrain_per_trial: bool = False) -> MetricReport:
    """Average AUC and AP over ``trials`` independent negative samples.

    Trial ``r`` samples with seed ``base_seed + r``.  The predictor is
    trained once on ``G_1..G_{N-1}`` unless ``retrain_per_trial`` is set,
    in which case it is retrained with the trial seed.
    """
    if trials < 1:
        raise InputError("trials must be >= 1")
    train = seq[:-1]
    scorer = None if retrain_per_trial else predictor(train, task, None)
    per_trial = []
    n_cmp = 0
    for r in range(trials):
        seed = base_seed + r
        split = make_split(seq, task, seed)
        if retrain_per_trial:
            scorer = predictor(train, task, seed)
        a, ap, n_cmp = split_metrics(split, scorer)
        per_trial.append((a, ap))
    mean_auc = float(sum(a for a, _ in per_trial) / trials)
    mean_ap = float(sum(p for _, p in per_trial) / trials)
    return MetricReport(mean_auc, mean_ap, n_cmp, trials, per_trial)
