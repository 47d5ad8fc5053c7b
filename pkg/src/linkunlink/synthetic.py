"""Planted-community dynamic networks for end-to-end checks."""

from __future__ import annotations

import numpy as np

from .netio import SnapshotSequence, adjacency_from_pairs


def planted_dynamic_network(n: int = 60, n_snapshots: int = 5, n_communities: int = 2,
                            p_stable: float = 0.12, stable_persistence: float = 0.9,
                            stable_return: float = 0.9, n_transient: int = 10,
                            transient_persistence: float = 0.1,
                            seed: int = 0) -> SnapshotSequence:
    """Snapshots mixing long-lived community edges with short-lived noise.

    Node ``i`` belongs to community ``i * n_communities // n``.  Each
    intra-community pair is a *stable* edge with probability ``p_stable``.
    A stable edge present at ``t - 1`` survives with probability
    ``stable_persistence``; an absent one (re)appears with probability
    ``stable_return``.  Every snapshot also receives ``n_transient`` fresh
    uniformly random non-stable pairs, and transient edges from the previous
    snapshot survive with probability ``transient_persistence``.
    """
    rng = np.random.default_rng(seed)
    comm = np.arange(n) * n_communities // n
    iu, ju = np.triu_indices(n, k=1)
    same = comm[iu] == comm[ju]
    stable_mask = same & (rng.random(len(iu)) < p_stable)
    stable = np.flatnonzero(stable_mask)
    other = np.flatnonzero(~stable_mask)

    on = rng.random(len(stable)) < stable_return
    transient = np.zeros(0, dtype=np.int64)
    snaps = []
    for t in range(n_snapshots):
        if t > 0:
            u = rng.random(len(stable))
            on = np.where(on, u < stable_persistence, u < stable_return)
            transient = transient[rng.random(len(transient)) < transient_persistence]
        fresh = rng.choice(other, size=min(n_transient, len(other)), replace=False)
        transient = np.union1d(transient, fresh)
        idx = np.concatenate([stable[on], transient])
        snaps.append(adjacency_from_pairs(np.column_stack([iu[idx], ju[idx]]), n))
    return SnapshotSequence(snaps, n, tuple(str(i) for i in range(n)),
                            {"generator": "planted", "seed": seed})
