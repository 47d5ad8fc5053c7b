"""Temporal link and unlink prediction on snapshot sequences.

Pipeline: :mod:`netio` (snapshots) -> :mod:`randwalk` (similarities) ->
:mod:`factor` (global + temporary NMF) -> :mod:`predict` (scores, rankings),
with :mod:`evalkit` and :mod:`baselines` for evaluation.
"""

from .errors import InputError, LinkUnlinkError, NumericalError, ShapeError
from .factor import FactorState, HyperParams, fit
from .netio import SnapshotSequence, TemporalEdgeList, load_sequence, load_temporal_edges, save_sequence, segment_snapshots
from .predict import rank_links, rank_unlinks, score_matrix
from .randwalk import SimilarityPair, WalkConfig, snapshot_similarities

__version__ = "0.1.0"
