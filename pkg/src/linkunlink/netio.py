"""Reading timestamped edge lists, cutting them into snapshots, persistence.

Raw data is a list of ``u v ts`` interaction records with arbitrary string
labels.  Labels are mapped to dense integer ids in order of first
appearance; the mapping travels with every :class:`SnapshotSequence` so
rankings can be written back with the original labels.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import InputError

FORMATS = ("whitespace-triples", "csv")
POLICIES = ("equal-time-span", "equal-edge-count")

MANIFEST = "manifest.json"
LABELS = "labels.txt"


@dataclass(frozen=True)
class TemporalEdgeList:
    """Interaction records ``(src[r], dst[r], ts[r])`` over ``node_count`` nodes."""

    src: np.ndarray
    dst: np.ndarray
    ts: np.ndarray
    node_count: int
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if not (len(self.src) == len(self.dst) == len(self.ts)):
            raise InputError("src, dst and ts must have equal length")
        if len(self.src) and np.any(self.src == self.dst):
            raise InputError("self-loop records are not allowed")
        for arr in (self.src, self.dst):
            if len(arr) and (arr.min() < 0 or arr.max() >= self.node_count):
                raise InputError("node ids must lie in [0, node_count)")
        if self.labels and len(self.labels) != self.node_count:
            raise InputError("label count does not match node_count")

    def __len__(self) -> int:
        return len(self.src)

    @property
    def records(self) -> list[tuple[int, int, int]]:
        return list(zip(self.src.tolist(), self.dst.tolist(), self.ts.tolist()))

    @classmethod
    def from_records(cls, records, node_count=None, labels=()):
        arr = np.asarray(list(records), dtype=np.int64).reshape(-1, 3)
        if node_count is None:
            node_count = int(arr[:, :2].max()) + 1 if len(arr) else 0
        return cls(arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy(),
                   int(node_count), tuple(labels))


@dataclass
class SnapshotSequence:
    """Ordered snapshots ``A_1..A_N`` over one fixed node set.

    Each snapshot is a symmetric binary CSR matrix with an empty diagonal.
    ``meta`` carries provenance such as the segmentation policy.
    """

    snapshots: list
    node_count: int
    labels: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        checked = []
        for t, A in enumerate(self.snapshots, start=1):
            A = sp.csr_matrix(A, dtype=np.float64)
            A.sum_duplicates()
            A.eliminate_zeros()
            if A.shape != (self.node_count, self.node_count):
                raise InputError(
                    f"snapshot {t}: shape {A.shape} != ({self.node_count}, {self.node_count})"
                )
            if A.nnz and not np.all(A.data == 1.0):
                raise InputError(f"snapshot {t}: entries must be 0 or 1")
            if A.diagonal().any():
                raise InputError(f"snapshot {t}: diagonal must be zero")
            if (A != A.T).nnz:
                raise InputError(f"snapshot {t}: adjacency must be symmetric")
            checked.append(A)
        self.snapshots = checked
        self.labels = tuple(self.labels)

    @property
    def N(self) -> int:
        return len(self.snapshots)

    def __len__(self) -> int:
        return len(self.snapshots)

    def __getitem__(self, t):
        """Zero-based access; slices return a new sequence."""
        if isinstance(t, slice):
            return SnapshotSequence(self.snapshots[t], self.node_count,
                                    self.labels, dict(self.meta))
        return self.snapshots[t]

    def edges(self, t: int) -> np.ndarray:
        """Edges of snapshot ``t`` (zero-based) as sorted ``(i, j)`` rows, ``i < j``."""
        upper = sp.triu(self.snapshots[t], k=1).tocoo()
        pairs = np.column_stack([upper.row, upper.col]).astype(np.int64)
        order = np.lexsort((pairs[:, 1], pairs[:, 0]))
        return pairs[order]

    def edge_set(self, t: int) -> set[tuple[int, int]]:
        return set(map(tuple, self.edges(t).tolist()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SnapshotSequence):
            return NotImplemented
        return (
            self.node_count == other.node_count
            and self.N == other.N
            and all((a != b).nnz == 0 for a, b in zip(self.snapshots, other.snapshots))
        )


def adjacency_from_pairs(pairs, node_count: int) -> sp.csr_matrix:
    """Symmetric binary adjacency from an iterable of ``(i, j)`` pairs."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    A = sp.csr_matrix((np.ones(len(rows)), (rows, cols)),
                      shape=(node_count, node_count))
    A.sum_duplicates()
    A.data[:] = 1.0
    return A


def _parse_rows(path: Path, fmt: str):
    with open(path, newline="") as fh:
        if fmt == "csv":
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise InputError(f"{path}: empty file")
            for lineno, row in enumerate(reader, start=2):
                if not row or not "".join(row).strip():
                    continue
                yield lineno, [c.strip() for c in row]
        else:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line[0] in "#%":
                    continue
                yield lineno, line.split()


def load_temporal_edges(path, fmt: str = "whitespace-triples",
                        columns: tuple[int, int, int] = (0, 1, 2)) -> TemporalEdgeList:
    """Parse ``u v ts`` records from a whitespace or CSV file.

    ``columns`` selects the (source, target, timestamp) fields, which lets
    files with extra columns such as weights be read directly.  Duplicate
    records are kept; self-loops and non-integer timestamps are rejected
    with the offending line number.
    """
    if fmt not in FORMATS:
        raise InputError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    path = Path(path)
    if not path.is_file():
        raise InputError(f"{path}: no such file")

    ids: dict[str, int] = {}
    src, dst, ts = [], [], []
    need = max(columns) + 1
    for lineno, fields in _parse_rows(path, fmt):
        if len(fields) < need:
            raise InputError(f"{path}:{lineno}: expected at least {need} fields, got {len(fields)}")
        u, v, t = (fields[c] for c in columns)
        try:
            stamp = int(t)
        except ValueError:
            raise InputError(f"{path}:{lineno}: timestamp {t!r} is not an integer") from None
        if u == v:
            raise InputError(f"{path}:{lineno}: self-loop on node {u!r}")
        src.append(ids.setdefault(u, len(ids)))
        dst.append(ids.setdefault(v, len(ids)))
        ts.append(stamp)
    if not src:
        raise InputError(f"{path}: no edge records")
    return TemporalEdgeList(
        np.asarray(src, dtype=np.int64),
        np.asarray(dst, dtype=np.int64),
        np.asarray(ts, dtype=np.int64),
        len(ids),
        tuple(ids),
    )


def bucket_index(edges: TemporalEdgeList, n_snapshots: int,
                 policy: str = "equal-time-span") -> np.ndarray:
    """Zero-based snapshot index of every record."""
    if policy not in POLICIES:
        raise InputError(f"unknown segmentation policy {policy!r}; expected one of {POLICIES}")
    if n_snapshots < 2:
        raise InputError("n_snapshots must be at least 2")
    if len(edges) == 0:
        raise InputError("cannot segment an empty edge list")

    ts = edges.ts
    if policy == "equal-time-span":
        distinct = len(np.unique(ts))
        if n_snapshots > distinct:
            raise InputError(
                f"{n_snapshots} snapshots requested but only {distinct} distinct timestamps"
            )
        lo, span = int(ts.min()), int(ts.max() - ts.min())
        # integer arithmetic keeps boundaries exact
        idx = ((ts - lo) * n_snapshots) // span
        return np.minimum(idx, n_snapshots - 1)

    order = np.argsort(ts, kind="stable")
    idx = np.empty(len(ts), dtype=np.int64)
    idx[order] = (np.arange(len(ts)) * n_snapshots) // len(ts)
    return idx


def segment_snapshots(edges: TemporalEdgeList, n_snapshots: int,
                      policy: str = "equal-time-span") -> SnapshotSequence:
    """Cut the records into ``n_snapshots`` binary undirected graphs.

    ``equal-time-span`` splits ``[min ts, max ts]`` into equal-width windows
    (the last one closed); ``equal-edge-count`` gives each snapshot the same
    number of records in time order.  Every node exists in every snapshot.
    """
    idx = bucket_index(edges, n_snapshots, policy)
    snaps = []
    for t in range(n_snapshots):
        sel = idx == t
        pairs = np.column_stack([edges.src[sel], edges.dst[sel]])
        snaps.append(adjacency_from_pairs(pairs, edges.node_count))
    return SnapshotSequence(snaps, edges.node_count, edges.labels,
                            {"policy": policy, "n_snapshots": n_snapshots})


def save_sequence(seq: SnapshotSequence, directory) -> None:
    """Write a manifest, ``labels.txt`` and one ``snapshot_<t>.edges`` file per snapshot."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for t in range(seq.N):
        pairs = seq.edges(t)
        with open(directory / f"snapshot_{t + 1}.edges", "w") as fh:
            fh.writelines(f"{i} {j}\n" for i, j in pairs.tolist())
    labels = seq.labels or tuple(str(i) for i in range(seq.node_count))
    with open(directory / LABELS, "w") as fh:
        fh.writelines(f"{lab}\n" for lab in labels)
    manifest = {"node_count": seq.node_count, "N": seq.N, "labels": LABELS}
    manifest.update({k: v for k, v in seq.meta.items() if k not in manifest})
    with open(directory / MANIFEST, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_sequence(directory) -> SnapshotSequence:
    directory = Path(directory)
    mpath = directory / MANIFEST
    if not mpath.is_file():
        raise InputError(f"{directory}: missing {MANIFEST}")
    try:
        with open(mpath) as fh:
            manifest = json.load(fh)
        n = int(manifest["node_count"])
        N = int(manifest["N"])
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{mpath}: corrupt manifest ({exc})") from None

    labels: tuple[str, ...] = ()
    lpath = directory / manifest.get("labels", LABELS)
    if lpath.is_file():
        with open(lpath) as fh:
            labels = tuple(line.rstrip("\n") for line in fh)
        if len(labels) != n:
            raise InputError(f"{lpath}: {len(labels)} labels for {n} nodes")

    snaps = []
    for t in range(1, N + 1):
        spath = directory / f"snapshot_{t}.edges"
        if not spath.is_file():
            raise InputError(f"snapshot {t}: missing file {spath}")
        try:
            if os.path.getsize(spath) == 0:
                pairs = np.empty((0, 2), dtype=np.int64)
            else:
                pairs = np.loadtxt(spath, dtype=np.int64, ndmin=2)
            if pairs.shape[1] != 2 or (pairs.size and (pairs.min() < 0 or pairs.max() >= n)):
                raise ValueError("bad pair rows")
            if pairs.size and np.any(pairs[:, 0] == pairs[:, 1]):
                raise ValueError("self-loop")
        except ValueError as exc:
            raise InputError(f"snapshot {t}: corrupt file {spath} ({exc})") from None
        snaps.append(adjacency_from_pairs(pairs, n))
    meta = {k: v for k, v in manifest.items() if k not in ("node_count", "N", "labels")}
    return SnapshotSequence(snaps, n, labels, meta)
