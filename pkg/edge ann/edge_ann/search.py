"""Best-first forest search and the exact brute-force reference.

All trees share one max-priority queue. Roots start at +inf; at an internal
node the child on the query's side keeps the parent's priority and the other
child gets min(parent, -|margin|), so far branches open in order of how close
the query lies to the planes that cut them off. Leaves feed the candidate set
until the budget is reached; candidates are then ranked by exact Euclidean distance.
"""
import heapq
import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .config import DEFAULT_K
from .edge_tree import Forest, LeafNode
from .errors import ConfigError, EmptyIndexError
from .logger import get_logger
from .vecstore import VecStore, check_query_dim

logger = get_logger(__name__)

BUDGET_UNITS = ("items", "leaves")


@dataclass(frozen=True)
class SearchParams:
    k: int = DEFAULT_K
    budget: int = 1000
    # "items": distinct candidate ids gathered; "leaves": leaf nodes examined
    budget_unit: str = "items"

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.budget_unit not in BUDGET_UNITS:
            raise ConfigError(f"budget_unit must be one of {BUDGET_UNITS}")
        if self.budget_unit == "items" and self.budget < self.k:
            raise ConfigError("budget must be >= k")
        if self.budget < 1:
            raise ConfigError("budget must be >= 1")


@dataclass(frozen=True)
class Neighbor:
    id: int
    dist: float


@dataclass
class QueryResult:
    neighbors: List[Neighbor]
    candidates_inspected: int
    candidate_ids: Tuple[int, ...] = field(default=(), repr=False)

    @property
    def ids(self) -> List[int]:
        return [nb.id for nb in self.neighbors]

    @property
    def dists(self) -> List[float]:
        return [nb.dist for nb in self.neighbors]


def euclidean(store: VecStore, ids: np.ndarray, q: np.ndarray) -> np.ndarray:
    diff = store.rows(ids) - q
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _rank(store: VecStore, ids: np.ndarray, q: np.ndarray, k: int) -> List[Neighbor]:
    if ids.size == 0:
        return []
    dists = euclidean(store, ids, q)
    order = np.lexsort((ids, dists))[:k]
    return [Neighbor(int(ids[i]), float(dists[i])) for i in order]


def brute_force_knn(store: VecStore, q, k: int) -> QueryResult:
    """Exact k nearest rows, ties broken by ascending id."""
    q = check_query_dim(store, q)
    if k < 1 or k > store.n:
        raise ConfigError(f"k must be in [1, {store.n}]")
    ids = np.arange(store.n, dtype=np.int64)
    return QueryResult(_rank(store, ids, q, k), store.n)


def _margin(node, store: VecStore, q: np.ndarray) -> float:
    plane = node.plane(store)
    w = plane.w
    return float((w @ q - plane.b) / np.linalg.norm(w))


def traverse(forest: Forest, store: VecStore, q, params: SearchParams) -> QueryResult:
    """Priority-queue traversal shared by anchor and baseline forests."""
    if not forest.trees:
        raise EmptyIndexError("forest has no trees")
    q = check_query_dim(store, q)
    forest.check_store(store)

    heap = []
    seq = 0
    for root in forest.trees:
        heapq.heappush(heap, (-math.inf, seq, root))
        seq += 1

    seen = set()
    order = []
    leaves = 0
    by_leaves = params.budget_unit == "leaves"

    while heap:
        spent = leaves if by_leaves else len(order)
        if spent >= params.budget:
            break
        neg_priority, _, node = heapq.heappop(heap)
        priority = -neg_priority
        if isinstance(node, LeafNode):
            leaves += 1
            for vid in node.ids.tolist():
                if vid not in seen:
                    seen.add(vid)
                    order.append(vid)
            continue

        m = _margin(node, store, q)
        near, far = (node.left, node.right) if m <= 0 else (node.right, node.left)
        heapq.heappush(heap, (-priority, seq, near))
        heapq.heappush(heap, (-min(priority, -abs(m)), seq + 1, far))
        seq += 2

    candidates = np.asarray(order, dtype=np.int64)
    neighbors = _rank(store, candidates, q, params.k)
    return QueryResult(neighbors, len(order), tuple(order))


def query(forest: Forest, store: VecStore, q, params: SearchParams = None) -> QueryResult:
    """Approximate top-k of q over an anchor forest."""
    if params is None:
        params = SearchParams()
    return traverse(forest, store, q, params)


def batch_query(forest: Forest, store: VecStore, queries, params: SearchParams = None) -> List[QueryResult]:
    if params is None:
        params = SearchParams()
    queries = np.atleast_2d(np.asarray(queries))
    logger.debug(f"Running {queries.shape[0]} queries with k={params.k} budget={params.budget}")
    return [traverse(forest, store, q, params) for q in queries]
