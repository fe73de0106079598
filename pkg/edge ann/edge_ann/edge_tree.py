"""Forest construction over a VecStore.

Each internal node of an anchor tree stores two VectorIds and a float32 shift;
its split plane is rebuilt from the two anchor rows whenever it is needed.
Nodes with at most `leaf_threshold` items become leaves. Splits put points with
w.x - b <= 0 on the left.
"""
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional

import numpy as np
import pandas as pd

from .anchor_opt import OptimizerConfig, median_shift, search_pair
from .config import DEFAULT_LEAF_THRESHOLD, DEFAULT_NUM_TREES, default_seed
from .errors import ConfigError, DimensionMismatchError, EmptyDatasetError, StoreMismatchError, UnsplittableError
from .geometry import Hyperplane, base_offset, final_offset, normal_vector
from .logger import get_logger
from .vecstore import VecStore

logger = get_logger(__name__)

# float32 ulps tried when rounding the stored offset unbalances a split
_MAX_NUDGES = 4


@dataclass(frozen=True)
class BuildConfig:
    leaf_threshold: int = DEFAULT_LEAF_THRESHOLD
    num_trees: int = DEFAULT_NUM_TREES
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed: int = None
    n_jobs: int = 1

    def __post_init__(self):
        if self.seed is None:
            object.__setattr__(self, "seed", default_seed())
        if self.leaf_threshold < 2:
            raise ConfigError("leaf_threshold must be >= 2")
        if self.num_trees < 1:
            raise ConfigError("num_trees must be >= 1")
        if self.n_jobs < 1:
            raise ConfigError("n_jobs must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")


@dataclass(eq=False)
class LeafNode:
    ids: np.ndarray


@dataclass(eq=False)
class AnchorNode:
    p1: int
    p2: int
    delta_d: np.float32
    left: object = None
    right: object = None

    def plane(self, store: VecStore) -> Hyperplane:
        p1, p2 = store.rows([self.p1, self.p2])
        w = normal_vector(p1, p2)
        b = final_offset(base_offset(p1, p2), float(self.delta_d), float(np.linalg.norm(w)))
        return Hyperplane(w, b)


@dataclass(eq=False)
class Forest:
    trees: list
    config: BuildConfig
    n: int
    dim: int
    store_key: Optional[str] = None
    build_seconds: float = 0.0
    warnings: List[str] = field(default_factory=list)

    kind = "edge"

    def check_store(self, store: VecStore) -> None:
        if store.dim != self.dim:
            raise DimensionMismatchError(f"forest has dim {self.dim}, store has dim {store.dim}")
        if store.n != self.n:
            raise StoreMismatchError(f"forest indexes {self.n} vectors, store holds {store.n}")
        if self.store_key is not None and store.fingerprint != self.store_key:
            raise StoreMismatchError("store content differs from the one this forest was built over")


def iter_nodes(root):
    """Yield (node, depth) in preorder, left before right."""
    stack = [(root, 0)]
    while stack:
        node, depth = stack.pop()
        yield node, depth
        if not isinstance(node, LeafNode):
            stack.append((node.right, depth + 1))
            stack.append((node.left, depth + 1))


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    """Independent generator for one tree of a forest."""
    return np.random.default_rng([tree_index, seed])


def settle_float32(value, left_fn: Callable):
    """Round a split threshold to float32 and keep the split it induces balanced.

    `left_fn(threshold)` returns the left mask. If rounding pushes the threshold
    past a middle point, try a few single-ulp nudges back toward the middle. When
    the rounded threshold leaves one side empty (a block of equal projections
    holds the median) and no nudge balances the split, the first nudge that puts
    points on both sides wins.
    """
    value = np.float32(value)
    mask = left_fn(value)
    imbalance = 2 * int(mask.sum()) - mask.size
    if abs(imbalance) <= 1:
        return value, mask

    target = np.float32(-np.inf) if imbalance > 0 else np.float32(np.inf)
    candidate = value
    proper = None
    for _ in range(_MAX_NUDGES):
        candidate = np.nextafter(candidate, target)
        cand_mask = left_fn(candidate)
        n_left = int(cand_mask.sum())
        if abs(2 * n_left - cand_mask.size) <= 1:
            return candidate, cand_mask
        if proper is None and 0 < n_left < cand_mask.size:
            proper = candidate, cand_mask
    if proper is not None and not 0 < int(mask.sum()) < mask.size:
        return proper
    return value, mask


def _shifted_split(X: np.ndarray, ia: int, ib: int):
    """Median-shifted split of X by anchor rows (ia, ib); the median uses every row."""
    p1, p2 = X[ia], X[ib]
    w = normal_vector(p1, p2)
    b0 = base_offset(p1, p2)
    norm = float(np.linalg.norm(w))
    z = X @ w
    delta_d = median_shift(X, p1, p2)
    return settle_float32(delta_d, lambda d: z - final_offset(b0, float(d), norm) <= 0)


def _anchor_split(X: np.ndarray, ids: np.ndarray, cfg: BuildConfig, rng: np.random.Generator):
    opt = replace(cfg.optimizer, seed=int(rng.integers(2**63)))
    m = ids.size
    if m > opt.sample_threshold:
        size = max(2, math.ceil(opt.sample_fraction * m))
        pick = np.sort(rng.choice(m, size=size, replace=False))
        try:
            ia, ib, _, _ = search_pair(X[pick], ids[pick], opt)
            ia, ib = int(pick[ia]), int(pick[ib])
        except UnsplittableError:
            ia, ib, _, _ = search_pair(X, ids, opt)
    else:
        ia, ib, _, _ = search_pair(X, ids, opt)

    delta32, mask = _shifted_split(X, ia, ib)
    return AnchorNode(int(ids[ia]), int(ids[ib]), delta32), mask


def grow_tree(ids, store: VecStore, cfg: BuildConfig, rng: np.random.Generator, splitter, warnings: list):
    """Build one tree top-down with an explicit stack (preorder, left first)."""
    root = None
    stack = [(np.asarray(ids, dtype=np.int64), None, None)]
    while stack:
        cur, parent, slot = stack.pop()
        node = None
        if cur.size > cfg.leaf_threshold:
            X = store.rows(cur)
            try:
                node, mask = splitter(X, cur, cfg, rng)
            except UnsplittableError:
                msg = f"unsplittable subset of {cur.size} identical vectors kept as one leaf"
                warnings.append(msg)
                logger.warning(msg)
            else:
                if mask.all() or not mask.any():
                    msg = f"split of {cur.size} vectors left one side empty; kept as one leaf"
                    warnings.append(msg)
                    logger.warning(msg)
                    node = None
        if node is None:
            node = LeafNode(cur.astype(np.uint32))

        if parent is None:
            root = node
        else:
            setattr(parent, slot, node)

        if not isinstance(node, LeafNode):
            stack.append((cur[~mask], node, "right"))
            stack.append((cur[mask], node, "left"))
    return root


def build_node(S_current, store: VecStore, cfg: BuildConfig = None, rng=None, warnings=None):
    """Build the anchor tree rooted at the id subset S_current."""
    if cfg is None:
        cfg = BuildConfig()
    ids = np.asarray(S_current, dtype=np.int64)
    if ids.size == 0:
        raise EmptyDatasetError("cannot build a node over an empty subset")
    if rng is None:
        rng = tree_rng(cfg.seed, 0)
    if warnings is None:
        warnings = []
    return grow_tree(ids, store, cfg, rng, _anchor_split, warnings)


def build_trees(store: VecStore, cfg: BuildConfig, splitter):
    all_ids = np.arange(store.n, dtype=np.int64)

    def one(index):
        warnings = []
        root = grow_tree(all_ids, store, cfg, tree_rng(cfg.seed, index), splitter, warnings)
        logger.debug(f"tree {index} built")
        return root, warnings

    if cfg.n_jobs > 1 and cfg.num_trees > 1:
        with ThreadPoolExecutor(max_workers=cfg.n_jobs) as pool:
            results = list(pool.map(one, range(cfg.num_trees)))
    else:
        results = [one(i) for i in range(cfg.num_trees)]

    trees = [root for root, _ in results]
    warnings = [w for _, ws in results for w in ws]
    return trees, warnings


def build_forest(store: VecStore, cfg: BuildConfig = None) -> Forest:
    """Build cfg.num_trees anchor trees, tree i seeded from (cfg.seed, i)."""
    if cfg is None:
        cfg = BuildConfig()
    if store is None or store.n == 0:
        raise EmptyDatasetError("cannot build a forest over an empty store")

    logger.debug(
        f"Building {cfg.num_trees} anchor trees over n={store.n} dim={store.dim} T={cfg.leaf_threshold}"
    )
    start = time.perf_counter()
    trees, warnings = build_trees(store, cfg, _anchor_split)
    elapsed = time.perf_counter() - start
    logger.debug(f"Anchor forest built in {elapsed:.3f}s with {len(warnings)} warnings")

    return Forest(trees, cfg, store.n, store.dim, store.fingerprint, elapsed, warnings)


@dataclass
class TreeStats:
    depth: int
    internal_nodes: int
    leaf_nodes: int
    depth_histogram: dict
    leaf_size_histogram: dict


@dataclass
class StatsReport:
    kind: str
    trees: List[TreeStats]
    build_seconds: float
    warnings: int

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "build_seconds": self.build_seconds,
            "warnings": self.warnings,
            "trees": [
                {
                    "depth": t.depth,
                    "internal_nodes": t.internal_nodes,
                    "leaf_nodes": t.leaf_nodes,
                    "depth_histogram": {str(k): v for k, v in sorted(t.depth_histogram.items())},
                    "leaf_size_histogram": {str(k): v for k, v in sorted(t.leaf_size_histogram.items())},
                }
                for t in self.trees
            ],
        }

    def to_frame(self) -> pd.DataFrame:
        """One row per tree with the scalar counts."""
        return pd.DataFrame(
            [
                {"tree": i, "depth": t.depth, "internal_nodes": t.internal_nodes, "leaf_nodes": t.leaf_nodes}
                for i, t in enumerate(self.trees)
            ]
        )


def _histogram(values) -> dict:
    counts = pd.Series(values).value_counts().sort_index()
    return {int(k): int(v) for k, v in counts.items()}


def tree_stats(forest: Forest) -> StatsReport:
    per_tree = []
    for root in forest.trees:
        depths = []
        sizes = []
        internal = 0
        for node, depth in iter_nodes(root):
            if isinstance(node, LeafNode):
                depths.append(depth)
                sizes.append(int(node.ids.size))
            else:
                internal += 1
        per_tree.append(
            TreeStats(
                depth=max(depths),
                internal_nodes=internal,
                leaf_nodes=len(sizes),
                depth_histogram=_histogram(depths),
                leaf_size_histogram=_histogram(sizes),
            )
        )
    return StatsReport(forest.kind, per_tree, forest.build_seconds, len(forest.warnings))
