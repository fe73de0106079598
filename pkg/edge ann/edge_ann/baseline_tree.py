"""Comparison forest whose internal nodes store the full hyperplane.

Splits pick two distinct random points of the subset, keep w = p2 - p1 and
shift the bisector onto the median signed distance, exactly as the anchor
trees do. The only difference is what a node stores: d + 1 float32 values
instead of two ids and one shift.
"""
import time
from dataclasses import dataclass

import numpy as np

from .edge_tree import BuildConfig, Forest, build_trees, settle_float32
from .errors import EmptyDatasetError, UnsplittableError
from .geometry import Hyperplane, base_offset, final_offset
from .logger import get_logger
from .search import QueryResult, SearchParams, traverse
from .vecstore import VecStore

logger = get_logger(__name__)


@dataclass(eq=False)
class BaselineNode:
    normal: np.ndarray
    offset: np.float32
    left: object = None
    right: object = None

    def plane(self, store: VecStore = None) -> Hyperplane:
        return Hyperplane(self.normal.astype(np.float64), float(self.offset))


class BaselineForest(Forest):
    kind = "baseline"


def _random_pair(X: np.ndarray, rng: np.random.Generator):
    m = X.shape[0]
    for _ in range(64):
        i = int(rng.integers(m))
        j = int(rng.integers(m - 1))
        if j >= i:
            j += 1
        if not np.array_equal(X[i], X[j]):
            return i, j
    differs = np.flatnonzero((X != X[0]).any(axis=1))
    if differs.size == 0:
        raise UnsplittableError(f"all {m} vectors are identical")
    return 0, int(differs[0])


def _random_split(X: np.ndarray, ids: np.ndarray, cfg: BuildConfig, rng: np.random.Generator):
    i, j = _random_pair(X, rng)
    p1, p2 = X[i], X[j]
    normal = (p2 - p1).astype(np.float32)
    w = normal.astype(np.float64)
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        # the float32 difference underflowed; treat like duplicates
        raise UnsplittableError("random anchors collapse to a zero normal in float32")
    b0 = base_offset(p1, p2)
    z = X @ w
    delta_d = float(np.median((z - b0) / norm))
    offset, mask = settle_float32(final_offset(b0, delta_d, norm), lambda b: z - float(b) <= 0)
    return BaselineNode(normal, offset), mask


def build_baseline_forest(store: VecStore, cfg: BuildConfig = None) -> BaselineForest:
    """Build cfg.num_trees explicit-hyperplane trees, seeded like build_forest."""
    if cfg is None:
        cfg = BuildConfig()
    if store is None or store.n == 0:
        raise EmptyDatasetError("cannot build a forest over an empty store")

    logger.debug(
        f"Building {cfg.num_trees} baseline trees over n={store.n} dim={store.dim} T={cfg.leaf_threshold}"
    )
    start = time.perf_counter()
    trees, warnings = build_trees(store, cfg, _random_split)
    elapsed = time.perf_counter() - start
    logger.debug(f"Baseline forest built in {elapsed:.3f}s")
    return BaselineForest(trees, cfg, store.n, store.dim, store.fingerprint, elapsed, warnings)


def baseline_query(forest: BaselineForest, store: VecStore, q, params: SearchParams = None) -> QueryResult:
    """Same traversal as search.query, reading the stored planes."""
    if params is None:
        params = SearchParams()
    return traverse(forest, store, q, params)
