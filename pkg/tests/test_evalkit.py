import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from linkunlink import evalkit as ek
from linkunlink.errors import InputError, NumericalError
from linkunlink.netio import SnapshotSequence, adjacency_from_pairs

A, B, C, D = range(4)


def four_node_seq():
    return SnapshotSequence([adjacency_from_pairs([(A, B), (B, C)], 4),
                             adjacency_from_pairs([(A, B), (A, C)], 4)], 4)


def brute_auc(pos, neg):
    gt = sum(p > q for p, q in itertools.product(pos, neg))
    eq = sum(p == q for p, q in itertools.product(pos, neg))
    return (gt + 0.5 * eq) / (len(pos) * len(neg)), gt, eq


def test_split_four_node_link():
    seen = set()
    for seed in range(40):
        split = ek.make_split(four_node_seq(), "link", seed)
        assert split.test_positives.tolist() == [[A, C]]
        assert len(split.test_negatives) == 1
        seen.add(tuple(split.test_negatives[0]))
    assert seen == {(A, D), (B, D), (C, D)}


def test_split_four_node_unlink():
    split = ek.make_split(four_node_seq(), "unlink", 0)
    assert split.test_positives.tolist() == [[A, B]]
    assert split.test_negatives.tolist() == [[B, C]]
    assert split.train.N == 1


def test_split_degenerate():
    G = adjacency_from_pairs([(0, 1)], 3)
    seq = SnapshotSequence([G, G], 3)
    for task in ek.TASKS:
        with pytest.raises(InputError, match="no evaluable events"):
            ek.make_split(seq, task, 0)


def test_split_pool_too_small():
    seq = SnapshotSequence([adjacency_from_pairs([], 3),
                            adjacency_from_pairs([(0, 1), (1, 2)], 3)], 3)
    with pytest.raises(InputError, match="pool"):
        ek.make_split(seq, "link", 0)


def test_split_deterministic_and_balanced():
    rng = np.random.default_rng(0)
    snaps = [adjacency_from_pairs(np.argwhere(np.triu(rng.random((30, 30)) < 0.15, 1)), 30)
             for _ in range(3)]
    seq = SnapshotSequence(snaps, 30)
    for task in ek.TASKS:
        a, b = ek.make_split(seq, task, 5), ek.make_split(seq, task, 5)
        assert np.array_equal(a.test_negatives, b.test_negatives)
        assert np.array_equal(a.test_positives, b.test_positives)
        assert len(a.test_positives) == len(a.test_negatives)
    link = ek.make_split(seq, "link", 5)
    blocked = seq.edge_set(1) | seq.edge_set(2)
    assert not {tuple(p) for p in link.test_negatives.tolist()} & blocked


def test_rejection_sampling_path(monkeypatch):
    monkeypatch.setattr(ek, "ENUMERATE_MAX_PAIRS", 0)
    split = ek.make_split(four_node_seq(), "link", 3)
    assert tuple(split.test_negatives[0]) in {(A, D), (B, D), (C, D)}


def test_auc_examples():
    assert ek.auc([0.9, 0.8], [0.1, 0.2]) == (1.0, 4, 4, 0)
    assert ek.auc([1, 1], [1, 1, 1])[0] == 0.5
    assert ek.auc([3, 1], [2, 1]) == (0.625, 4, 2, 1)


def test_auc_errors():
    with pytest.raises(InputError):
        ek.auc([], [1])
    with pytest.raises(NumericalError):
        ek.auc([np.nan], [1])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=12),
       st.lists(st.integers(0, 5), min_size=1, max_size=12))
def test_auc_matches_brute_force(pos, neg):
    value, n, gt, eq = ek.auc(pos, neg)
    ref, rgt, req = brute_auc(pos, neg)
    assert (gt, eq, n) == (rgt, req, len(pos) * len(neg))
    assert value == ref


def test_auc_against_sklearn():
    metrics = pytest.importorskip("sklearn.metrics")
    rng = np.random.default_rng(1)
    for _ in range(20):
        pos, neg = rng.integers(0, 10, 30), rng.integers(0, 10, 25)
        y = np.r_[np.ones(30), np.zeros(25)]
        assert ek.auc(pos, neg)[0] == pytest.approx(metrics.roc_auc_score(y, np.r_[pos, neg]), abs=1e-12)


def test_auc_monotone_invariance():
    rng = np.random.default_rng(2)
    pos, neg = rng.normal(size=40), rng.normal(size=40)
    base = ek.auc(pos, neg)[0]
    assert ek.auc(np.exp(pos), np.exp(neg))[0] == base
    assert ek.auc(3 * pos + 1, 3 * neg + 1)[0] == base


def test_ap_examples():
    assert ek.average_precision([True, True, False, False]) == 1.0
    assert abs(ek.average_precision([True, False, True, False]) - 5 / 6) < 1e-12
    assert abs(ek.average_precision([False, False, True]) - 1 / 3) < 1e-12
    with pytest.raises(InputError):
        ek.average_precision([False, False])


def test_rank_labels_ties_lexicographic():
    labels = ek.rank_labels([(1, 2)], [0.5], [(0, 3)], [0.5])
    assert labels.tolist() == [False, True]


def constant_predictor(train, task, seed):
    return lambda pairs: np.zeros(len(pairs))


def test_evaluate_perfect_and_constant():
    seq = four_node_seq()
    pos = {(A, C)}
    perfect = lambda train, task, seed: (
        lambda pairs: np.array([1.0 if tuple(p) in pos else 0.0 for p in pairs]))
    report = ek.evaluate(seq, perfect, "link", trials=1)
    assert (report.auc, report.ap) == (1.0, 1.0)
    report = ek.evaluate(seq, constant_predictor, "link", trials=5)
    assert [a for a, _ in report.per_trial] == [0.5] * 5
    assert report.auc == 0.5 and report.trials == 5


def test_evaluate_mean_of_identical_trials():
    report = ek.evaluate(four_node_seq(), constant_predictor, "unlink", trials=5)
    assert len(report.per_trial) == 5
    assert report.ap == report.per_trial[0][1]


def test_evaluate_retrain_seeds():
    seen = []

    def predictor(train, task, seed):
        seen.append(seed)
        return lambda pairs: np.zeros(len(pairs))

    ek.evaluate(four_node_seq(), predictor, "link", trials=3, base_seed=10)
    ek.evaluate(four_node_seq(), predictor, "link", trials=3, base_seed=10, retrain_per_trial=True)
    assert seen == [None, 10, 11, 12]
    with pytest.raises(InputError):
        ek.evaluate(four_node_seq(), predictor, "link", trials=0)


def test_report_serialization():
    report = ek.MetricReport(0.75, 0.5, 4, 2, [(1.0, 0.5), (0.5, 0.5)])
    assert report.to_dict()["per_trial"][0] == {"auc": 1.0, "ap": 0.5}
    assert '"auc": 0.75' in report.to_json()
    assert report.csv_row("d", "link", "aa", 0) == ["d", "link", "aa", "0.75", "0.5", 2, 0]
