"""Anchor-pair tree index for approximate nearest neighbor search.

Internal nodes store two vector ids and one float32 shift instead of a full
hyperplane, so the tree structure does not grow with the vector dimension.
The `bench` module and the CLI compare it against explicit-hyperplane trees.
"""

from .config import DEFAULT_K, DEFAULT_LEAF_THRESHOLD, DEFAULT_NUM_TREES
from .logger import get_logger
from .errors import EdgeAnnError
from .vecstore import DataGenSpec, VecStore, gen_synthetic, load_csv, load_fvecs, load_vectors, write_fvecs
from .anchor_opt import OptimizerConfig, optimize_anchors
from .edge_tree import BuildConfig, Forest, build_forest, tree_stats
from .baseline_tree import BaselineForest, baseline_query, build_baseline_forest
from .search import SearchParams, batch_query, brute_force_knn, query
from .persist import SizeReport, deserialize, predict_size, serialize
from .metrics import performance_loss, recall_at_k

__all__ = [
    "DEFAULT_K",
    "DEFAULT_LEAF_THRESHOLD",
    "DEFAULT_NUM_TREES",
    "get_logger",
    "EdgeAnnError",
    "DataGenSpec",
    "VecStore",
    "gen_synthetic",
    "load_csv",
    "load_fvecs",
    "load_vectors",
    "write_fvecs",
    "OptimizerConfig",
    "optimize_anchors",
    "BuildConfig",
    "Forest",
    "build_forest",
    "tree_stats",
    "BaselineForest",
    "baseline_query",
    "build_baseline_forest",
    "SearchParams",
    "batch_query",
    "brute_force_knn",
    "query",
    "SizeReport",
    "deserialize",
    "predict_size",
    "serialize",
    "performance_loss",
    "recall_at_k",
    # bench and cli are imported on demand
]
