"""Experiment harness behind the `bench`, `sweep-leaf` and `scale` commands.

Queries are held out of the build set by id, ground truth comes from
brute_force_knn over the build set, and every table is a pandas DataFrame with
a fixed column order (see config.BENCH_COLUMNS and friends).
"""
import itertools
import math
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, List, Sequence, Tuple

import numpy as np
import pandas as pd

from .anchor_opt import CandidatePair, nearest_anchor_mask, pair_rows, row_spread
from .baseline_tree import build_baseline_forest
from .config import BENCH_COLUMNS, DEFAULT_K, SCALE_COLUMNS, SWEEP_COLUMNS
from .edge_tree import BuildConfig, Forest, build_forest
from .errors import ConfigError, SubsetTooLargeError
from .logger import get_logger
from .metrics import ComparisonReport, LatencyReport, RecallReport, performance_loss, recall_at_k
from .persist import serialize
from .search import QueryResult, SearchParams, brute_force_knn, traverse
from .vecstore import DataGenSpec, VecStore, check_ids, gen_synthetic

logger = get_logger(__name__)

ORACLE_MAX_SUBSET = 64


@dataclass(frozen=True)
class OracleEntry:
    pair: CandidatePair
    j1: int
    j2: float


def lexicographic_score(S, store: VecStore, pair) -> Tuple[int, float]:
    """(J1, -J2) of pair over S after the raw nearest-anchor split; lower is better."""
    ids = np.asarray(S, dtype=np.int64)
    pi, pj = pair_rows(store, pair)
    X = store.rows(ids)
    n_i = int(nearest_anchor_mask(X, pi, pj).sum())
    return abs(2 * n_i - ids.size), -row_spread(X, pi, pj)


def exhaustive_anchor_oracle(S, store: VecStore) -> List[OracleEntry]:
    """Score every anchor pair of S, best first (min J1, then max J2, then pair).

    Pairs of identical vectors define no bisector and are left out.
    """
    ids = np.asarray(S, dtype=np.int64)
    if ids.size > ORACLE_MAX_SUBSET:
        raise SubsetTooLargeError(f"oracle is limited to {ORACLE_MAX_SUBSET} points, got {ids.size}")
    check_ids(store, ids)
    X = store.rows(ids)

    entries = []
    for a, b in itertools.combinations(range(ids.size), 2):
        if np.array_equal(X[a], X[b]):
            continue
        n_a = int(nearest_anchor_mask(X, X[a], X[b]).sum())
        pair = CandidatePair.of(ids[a], ids[b])
        entries.append(OracleEntry(pair, abs(2 * n_a - ids.size), row_spread(X, X[a], X[b])))
    entries.sort(key=lambda e: (e.j1, -e.j2, e.pair))
    return entries


@dataclass
class HoldoutSplit:
    """Build store plus held-out queries; ids refer to the source store."""

    build_store: VecStore
    queries: np.ndarray
    build_ids: np.ndarray
    query_ids: np.ndarray

    @property
    def disjoint(self) -> bool:
        return np.intersect1d(self.build_ids, self.query_ids).size == 0


def holdout_split(store: VecStore, holdout: int, seed: int) -> HoldoutSplit:
    if holdout < 1:
        raise ConfigError("holdout must be >= 1")
    if holdout >= store.n:
        raise ConfigError(f"holdout ({holdout}) must be smaller than the dataset ({store.n})")
    perm = np.random.default_rng(seed).permutation(store.n)
    query_ids = np.sort(perm[:holdout])
    build_ids = np.sort(perm[holdout:])
    split = HoldoutSplit(store.subset(build_ids), store.rows(query_ids), build_ids, query_ids)
    logger.debug(f"Holdout split: {build_ids.size} build vectors, {query_ids.size} queries")
    return split


def ground_truth(store: VecStore, queries: np.ndarray, k: int = DEFAULT_K) -> List[List[int]]:
    return [brute_force_knn(store, q, k).ids for q in queries]


def run_queries(forest: Forest, store: VecStore, queries: np.ndarray, params: SearchParams):
    """Single-threaded timed loop; returns (results, per-query seconds)."""
    results: List[QueryResult] = []
    timings = []
    for q in queries:
        start = time.perf_counter()
        results.append(traverse(forest, store, q, params))
        timings.append(time.perf_counter() - start)
    return results, timings


def evaluate(forest: Forest, store: VecStore, queries, truth, params: SearchParams):
    results, timings = run_queries(forest, store, queries, params)
    recalls = [recall_at_k(gt, res.ids, params.k) for gt, res in zip(truth, results)]
    return RecallReport.from_values(recalls, params.k), LatencyReport.from_timings(timings)


def throughput(forest: Forest, store: VecStore, queries, params: SearchParams, threads: int) -> float:
    """Queries per second with `threads` concurrent workers."""
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(lambda q: traverse(forest, store, q, params), queries))
    elapsed = time.perf_counter() - start
    return len(queries) / elapsed if elapsed > 0 else math.inf


def index_bytes(forest: Forest, store: VecStore, embed_vectors: bool = True) -> int:
    with tempfile.TemporaryDirectory() as tmp:
        return serialize(forest, store, Path(tmp) / "index.eann", embed_vectors).total_bytes


def build_pair(store: VecStore, cfg: BuildConfig) -> Tuple[Forest, Forest]:
    """Anchor and baseline forests over the same store, built side by side."""
    with ThreadPoolExecutor(max_workers=2) as pool:
        edge = pool.submit(build_forest, store, cfg)
        base = pool.submit(build_baseline_forest, store, cfg)
        return edge.result(), base.result()


@dataclass
class BenchRun:
    table: pd.DataFrame
    comparison: ComparisonReport
    split: HoldoutSplit
    throughput_edge: float = None
    throughput_base: float = None


def run_bench(
    store: VecStore,
    budgets: Sequence[int],
    holdout: int,
    k: int = DEFAULT_K,
    cfg: BuildConfig = None,
    threads: int = 1,
) -> BenchRun:
    """Recall/latency of anchor vs baseline forests over a budget ladder."""
    if cfg is None:
        cfg = BuildConfig()
    if not budgets:
        raise ConfigError("at least one budget is required")
    split = holdout_split(store, holdout, cfg.seed)
    truth = ground_truth(split.build_store, split.queries, k)
    edge, base = build_pair(split.build_store, cfg)

    rows = []
    for budget in sorted(budgets):
        params = SearchParams(k=k, budget=budget)
        r_edge, t_edge = evaluate(edge, split.build_store, split.queries, truth, params)
        r_base, t_base = evaluate(base, split.build_store, split.queries, truth, params)
        p_loss = performance_loss(r_edge.mean_recall, r_base.mean_recall) if r_base.mean_recall > 0 else np.nan
        rows.append(
            {
                "budget": budget,
                "recall_edge": r_edge.mean_recall,
                "recall_base": r_base.mean_recall,
                "ms_edge": t_edge.per_query_ms,
                "ms_base": t_base.per_query_ms,
                "p_loss": p_loss,
                "p50_ms_edge": t_edge.p50_ms,
                "p95_ms_edge": t_edge.p95_ms,
                "p50_ms_base": t_base.p50_ms,
                "p95_ms_base": t_base.p95_ms,
            }
        )
        logger.debug(f"budget={budget}: recall edge={r_edge.mean_recall:.4f} base={r_base.mean_recall:.4f}")
    table = pd.DataFrame(rows, columns=BENCH_COLUMNS)

    last = table.iloc[-1]
    comparison = ComparisonReport.build(
        float(last["recall_edge"]),
        float(last["recall_base"]),
        index_bytes(edge, split.build_store),
        index_bytes(base, split.build_store),
    )
    run = BenchRun(table, comparison, split)
    if threads > 1:
        params = SearchParams(k=k, budget=int(last["budget"]))
        run.throughput_edge = throughput(edge, split.build_store, split.queries, params, threads)
        run.throughput_base = throughput(base, split.build_store, split.queries, params, threads)
    return run


def leaf_sweep(
    store: VecStore,
    leaves: Sequence[int],
    budgets: Sequence[int],
    holdout: int,
    k: int = DEFAULT_K,
    cfg: BuildConfig = None,
) -> pd.DataFrame:
    """Build time and recall-vs-budget of anchor forests, one per leaf threshold."""
    if cfg is None:
        cfg = BuildConfig()
    split = holdout_split(store, holdout, cfg.seed)
    truth = ground_truth(split.build_store, split.queries, k)

    rows = []
    for leaf in leaves:
        forest = build_forest(split.build_store, replace(cfg, leaf_threshold=leaf))
        for budget in sorted(budgets):
            recall, latency = evaluate(forest, split.build_store, split.queries, truth, SearchParams(k=k, budget=budget))
            rows.append(
                {
                    "leaf": leaf,
                    "build_s": forest.build_seconds,
                    "budget": budget,
                    "recall": recall.mean_recall,
                    "ms_per_query": latency.per_query_ms,
                }
            )
        logger.debug(f"leaf={leaf} built in {forest.build_seconds:.3f}s")
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def fit_loglog(ns: Sequence[float], seconds: Sequence[float]) -> Tuple[float, float]:
    """Slope and R^2 of log(seconds) against log(n)."""
    x = np.log(np.asarray(ns, dtype=np.float64))
    y = np.log(np.asarray(seconds, dtype=np.float64))
    if x.size < 2:
        raise ConfigError("need at least two points to fit a slope")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


@dataclass
class ScaleRun:
    table: pd.DataFrame
    slope: float
    r2: float


def scale_study(
    sizes: Sequence[int],
    dim: int,
    cfg: BuildConfig = None,
    clusters: int = 16,
    stddev: float = 0.05,
    builder: Callable = build_forest,
) -> ScaleRun:
    """Build time over an N ladder of synthetic datasets and its log-log slope."""
    if cfg is None:
        cfg = BuildConfig()
    rows = []
    for n in sizes:
        store = gen_synthetic(DataGenSpec(n, dim, clusters, stddev, seed=cfg.seed))
        forest = builder(store, cfg)
        rows.append({"n": n, "build_s": forest.build_seconds})
        logger.debug(f"n={n} built in {forest.build_seconds:.3f}s")
    table = pd.DataFrame(rows, columns=SCALE_COLUMNS)
    slope, r2 = fit_loglog(table["n"], table["build_s"])
    return ScaleRun(table, slope, r2)
