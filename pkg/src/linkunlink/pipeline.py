"""End-to-end model: similarities -> factorization -> proximity scores."""

from __future__ import annotations

from dataclasses import replace
from typing import Optional

from .factor import FactorState, HyperParams, fit
from .errors import InputError
from .netio import SnapshotSequence
from .predict import pair_scores
from .randwalk import SimilarityPair, WalkConfig, snapshot_similarities

VARIANTS = ("luls1", "luls2", "luls3")


def apply_variant(hp: HyperParams, variant: str) -> HyperParams:
    """``luls2`` drops the graph constraint, ``luls3`` also drops smoothness."""
    variant = variant.lower()
    if variant == "luls1":
        return hp
    if variant == "luls2":
        return replace(hp, gamma=0.0)
    if variant == "luls3":
        return replace(hp, gamma=0.0, lam=0.0)
    raise InputError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def fit_sequence(seq: SnapshotSequence, walk: WalkConfig, hp: HyperParams,
                 threads: int = 1) -> tuple[list[SimilarityPair], FactorState]:
    pairs = snapshot_similarities(seq, walk, threads=threads)
    return pairs, fit(pairs, hp)


def make_predictor(walk: WalkConfig, hp: HyperParams, threads: int = 1):
    """Predictor for :func:`linkunlink.evalkit.evaluate`.

    The same factor model scores both tasks; a trial seed, when given,
    replaces the initialization seed.
    """

    def predictor(train: SnapshotSequence, task: str, seed: Optional[int] = None):
        params = hp if seed is None else replace(hp, seed=seed)
        _, state = fit_sequence(train, walk, params, threads)
        return lambda pairs: pair_scores(state, pairs)

    return predictor
