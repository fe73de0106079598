"""Anchor pair selection for one tree node.

Phase 1 refines K random anchor pairs by translating each pair toward the heavy
side of its nearest-anchor split ("virtual anchors") and projecting back onto
real points, until the candidate set repeats. The best pair is the one with the
smallest imbalance J1, then the largest spread J2. Phase 2 picks the shift
delta_d that moves the bisector onto the median signed distance.

The id-level functions take id subsets and a VecStore. The row-level ones
(nearest_anchor_mask, row_spread, search_pair, median_shift) work on a float64
row matrix `X` with positions into it, which is what the tree builder and the
bench oracle use.
"""
import math
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np

from .config import (
    DEFAULT_CANDIDATES,
    DEFAULT_MAX_ITERS,
    DEFAULT_SAMPLE_FRACTION,
    DEFAULT_SAMPLE_THRESHOLD,
    default_seed,
)
from .errors import ConfigError, DegenerateAnchorsError, EdgeAnnError, UnsplittableError, VectorIdError
from .geometry import Hyperplane, signed_distances
from .logger import get_logger
from .vecstore import VecStore, check_ids

logger = get_logger(__name__)


class CandidatePair(NamedTuple):
    """Anchor pair stored with a < b so sets compare order-insensitively."""

    a: int
    b: int

    @classmethod
    def of(cls, x, y) -> "CandidatePair":
        x, y = int(x), int(y)
        if x == y:
            raise DegenerateAnchorsError(f"anchor pair uses the same id twice ({x})")
        return cls(x, y) if x < y else cls(y, x)


@dataclass(frozen=True)
class OptimizerConfig:
    k_candidates: int = DEFAULT_CANDIDATES
    max_iters: int = DEFAULT_MAX_ITERS
    sample_fraction: float = DEFAULT_SAMPLE_FRACTION
    sample_threshold: int = DEFAULT_SAMPLE_THRESHOLD
    seed: int = None

    def __post_init__(self):
        if self.seed is None:
            object.__setattr__(self, "seed", default_seed())
        if self.k_candidates < 1:
            raise ConfigError("k_candidates must be >= 1")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if not 0 < self.sample_fraction <= 1:
            raise ConfigError("sample_fraction must be in (0, 1]")
        if self.sample_threshold < 2:
            raise ConfigError("sample_threshold must be >= 2")


@dataclass(frozen=True)
class AnchorResult:
    p1: int
    p2: int
    delta_d: float
    iterations: int = 0
    converged: bool = True


def _sq_dists(X: np.ndarray, p: np.ndarray) -> np.ndarray:
    diff = X - p
    return np.einsum("ij,ij->i", diff, diff)


def nearest_anchor_mask(X, pi, pj) -> np.ndarray:
    # ties go to the i side
    return _sq_dists(X, pi) <= _sq_dists(X, pj)


def row_spread(X, pi, pj) -> float:
    """Sum of |distance| from the rows of X to the bisector of pi and pj."""
    diff = pi - pj
    norm = float(np.linalg.norm(diff))
    if norm == 0.0:
        raise DegenerateAnchorsError("anchors are identical vectors")
    return float(np.abs((X - (pi + pj) / 2.0) @ diff).sum() / norm)


def pair_rows(store: VecStore, pair) -> Tuple[np.ndarray, np.ndarray]:
    a, b = int(pair[0]), int(pair[1])
    check_ids(store, [a, b])
    pi, pj = store.rows([a, b])
    if np.array_equal(pi, pj):
        raise DegenerateAnchorsError(f"anchors {a} and {b} are identical vectors")
    return pi, pj


def partition_by_anchors(S, store: VecStore, pair) -> Tuple[np.ndarray, np.ndarray]:
    """Split ids S by nearest anchor; equidistant points go to the first anchor."""
    ids = np.asarray(S, dtype=np.int64)
    pi, pj = pair_rows(store, pair)
    mask = nearest_anchor_mask(store.rows(ids), pi, pj)
    return ids[mask], ids[~mask]


def imbalance_j1(S_i, S_j) -> int:
    return abs(len(S_i) - len(S_j))


def spread_j2(S, store: VecStore, pair) -> float:
    """Sum of distances from the points of S to the anchors' bisector."""
    pi, pj = pair_rows(store, pair)
    return row_spread(store.rows(np.asarray(S, dtype=np.int64)), pi, pj)


def alpha(ratio: float) -> float:
    """Translation damping: large for lopsided splits, e^-2 at ratio 1."""
    return math.exp(-2.0 * ratio * ratio)


def _nearest_member(dists, mask, ids, fallback: int) -> int:
    members = np.flatnonzero(mask)
    if members.size == 0:
        return fallback
    d = dists[members]
    ties = members[d == d.min()]
    return int(ties[np.argmin(ids[ties])])


def _refine(X: np.ndarray, ids: np.ndarray, ia: int, ib: int) -> Tuple[int, int]:
    """One evaluate-adjust-project step on positions (ia, ib) into X."""
    pi, pj = X[ia], X[ib]
    in_i = nearest_anchor_mask(X, pi, pj)
    n_i = int(in_i.sum())
    n_j = X.shape[0] - n_i
    if n_i > n_j:
        large, small, n_large, n_small = in_i, ~in_i, n_i, n_j
    else:
        large, small, n_large, n_small = ~in_i, in_i, n_j, n_i
    if n_small == 0:
        return ia, ib

    d_diff = X[large].mean(axis=0) - X[small].mean(axis=0)
    dv = alpha(n_small / n_large) * d_diff
    vi, vj = pi + dv, pj + dv

    di, dj = _sq_dists(X, vi), _sq_dists(X, vj)
    in_vi = di <= dj
    # an empty side keeps its original anchor
    new_a = _nearest_member(di, in_vi, ids, ia)
    new_b = _nearest_member(dj, ~in_vi, ids, ib)
    if new_a == new_b or np.array_equal(X[new_a], X[new_b]):
        return ia, ib
    return new_a, new_b


def _canon(ids: np.ndarray, ia: int, ib: int) -> CandidatePair:
    return CandidatePair.of(ids[ia], ids[ib])


def _positions(ids: np.ndarray) -> dict:
    return {int(v): k for k, v in enumerate(ids)}


def refine_candidate(S, store: VecStore, pair) -> CandidatePair:
    """One Phase-1 step for a single pair; members of `pair` must be in S."""
    ids = np.asarray(S, dtype=np.int64)
    if ids.size < 2:
        raise EdgeAnnError("refine_candidate needs at least two points")
    pos = _positions(ids)
    try:
        ia, ib = pos[int(pair[0])], pos[int(pair[1])]
    except KeyError as exc:
        raise VectorIdError(f"anchor {exc.args[0]} is not a member of the subset") from exc
    X = store.rows(ids)
    if np.array_equal(X[ia], X[ib]):
        raise DegenerateAnchorsError("anchors are identical vectors")
    return _canon(ids, *_refine(X, ids, ia, ib))


def _is_constant(X: np.ndarray) -> bool:
    return bool((X == X[0]).all())


def _initial_pairs(X: np.ndarray, ids: np.ndarray, k: int, rng: np.random.Generator) -> set:
    m = X.shape[0]
    pairs = set()
    if m * (m - 1) // 2 <= 4 * k:
        rows, cols = np.triu_indices(m, 1)
        for t in rng.permutation(rows.size):
            i, j = int(rows[t]), int(cols[t])
            if np.array_equal(X[i], X[j]):
                continue
            pairs.add(_canon(ids, i, j))
            if len(pairs) == k:
                break
        return pairs

    for _ in range(100 * k):
        i = int(rng.integers(m))
        j = int(rng.integers(m - 1))
        if j >= i:
            j += 1
        if np.array_equal(X[i], X[j]):
            continue
        pairs.add(_canon(ids, i, j))
        if len(pairs) == k:
            break

    if not pairs:
        # duplicate-heavy subset: pair the first row with any row that differs
        other = int(np.flatnonzero((X != X[0]).any(axis=1))[0])
        pairs.add(_canon(ids, 0, other))
    return pairs


def _pair_score(X, pos, pair: CandidatePair):
    pi, pj = X[pos[pair.a]], X[pos[pair.b]]
    in_i = nearest_anchor_mask(X, pi, pj)
    n_i = int(in_i.sum())
    j1 = abs(n_i - (X.shape[0] - n_i))
    return j1, -row_spread(X, pi, pj), pair


def search_pair(X: np.ndarray, ids: np.ndarray, cfg: OptimizerConfig):
    """Phase 1 on a row matrix. Returns (pos_p1, pos_p2, iterations, converged)."""
    if X.shape[0] < 2:
        raise EdgeAnnError("anchor optimization needs at least two points")
    if _is_constant(X):
        raise UnsplittableError(f"all {X.shape[0]} vectors are identical")

    rng = np.random.default_rng(cfg.seed)
    pos = _positions(ids)
    candidates = frozenset(_initial_pairs(X, ids, cfg.k_candidates, rng))

    history = set()
    iterations = 0
    while candidates not in history and iterations < cfg.max_iters:
        history.add(candidates)
        candidates = frozenset(_canon(ids, *_refine(X, ids, pos[p.a], pos[p.b])) for p in candidates)
        iterations += 1
    converged = candidates in history
    if not converged:
        logger.debug("anchor search hit max_iters=%d on %d points", cfg.max_iters, X.shape[0])

    # smallest J1, then largest J2, then lowest pair
    j1, neg_j2, best = min(_pair_score(X, pos, p) for p in candidates)
    logger.debug(
        "anchor search: n=%d iterations=%d candidates=%d J1=%d J2=%.6g",
        X.shape[0], iterations, len(candidates), j1, -neg_j2,
    )
    return pos[best.a], pos[best.b], iterations, converged


def median_shift(X: np.ndarray, p1: np.ndarray, p2: np.ndarray) -> float:
    """Median signed distance of the rows of X to the p1/p2 bisector."""
    return float(np.median(signed_distances(X, Hyperplane.from_anchors(p1, p2))))


def median_offset(S, store: VecStore, pair) -> float:
    """Median signed distance of S to the bisector of pair (p1 = pair[0])."""
    p1, p2 = pair_rows(store, pair)
    return median_shift(store.rows(np.asarray(S, dtype=np.int64)), p1, p2)


def optimize_anchors(S, store: VecStore, cfg: OptimizerConfig = None) -> AnchorResult:
    """Run both phases over the id subset S."""
    if cfg is None:
        cfg = OptimizerConfig()
    ids = np.asarray(S, dtype=np.int64)
    if ids.size < 2:
        raise EdgeAnnError("optimize_anchors needs at least two points")
    check_ids(store, ids)
    X = store.rows(ids)
    ia, ib, iterations, converged = search_pair(X, ids, cfg)
    delta_d = median_shift(X, X[ia], X[ib])
    return AnchorResult(int(ids[ia]), int(ids[ib]), delta_d, iterations, converged)
