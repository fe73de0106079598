import itertools

import numpy as np
import pytest

from edge_ann.anchor_opt import CandidatePair, imbalance_j1, partition_by_anchors, spread_j2
from edge_ann.bench import (
    exhaustive_anchor_oracle,
    fit_loglog,
    holdout_split,
    leaf_sweep,
    lexicographic_score,
    run_bench,
    scale_study,
)
from edge_ann.config import BENCH_COLUMNS, SCALE_COLUMNS, SWEEP_COLUMNS
from edge_ann.edge_tree import BuildConfig
from edge_ann.errors import ConfigError, SubsetTooLargeError
from edge_ann.metrics import performance_loss
from edge_ann.vecstore import VecStore


def test_oracle_three_collinear_points():
    store = VecStore([[0, 0], [1, 0], [2, 0]])
    ranked = exhaustive_anchor_oracle([0, 1, 2], store)
    assert len(ranked) == 3
    # every pair leaves a 2|1 split; the adjacent pairs spread the points
    # further (2.5) than the endpoints do (2.0), lowest pair wins the tie
    assert [e.pair for e in ranked] == [CandidatePair(0, 1), CandidatePair(1, 2), CandidatePair(0, 2)]
    assert all(e.j1 == 1 for e in ranked)
    assert ranked[0].j2 == pytest.approx(2.5)
    assert ranked[-1].j2 == pytest.approx(2.0)


def test_oracle_two_points():
    store = VecStore([[0, 0], [1, 1]])
    ranked = exhaustive_anchor_oracle([0, 1], store)
    assert [e.pair for e in ranked] == [CandidatePair(0, 1)]
    assert ranked[0].j1 == 0


def test_oracle_skips_identical_pairs():
    store = VecStore([[0, 0], [0, 0], [1, 0]])
    pairs = [e.pair for e in exhaustive_anchor_oracle([0, 1, 2], store)]
    assert CandidatePair(0, 1) not in pairs
    assert len(pairs) == 2


def test_oracle_size_guard():
    store = VecStore(np.random.default_rng(0).normal(size=(70, 2)))
    with pytest.raises(SubsetTooLargeError):
        exhaustive_anchor_oracle(range(65), store)


def test_oracle_agrees_with_public_objectives():
    rng = np.random.default_rng(21)
    for _ in range(10):
        store = VecStore(rng.normal(size=(12, 3)))
        S = list(range(12))
        expected = []
        for a, b in itertools.combinations(S, 2):
            s_i, s_j = partition_by_anchors(S, store, (a, b))
            expected.append((imbalance_j1(s_i, s_j), -spread_j2(S, store, (a, b)), CandidatePair(a, b)))
        expected.sort()
        ranked = exhaustive_anchor_oracle(S, store)
        assert [e.pair for e in ranked] == [p for _, _, p in expected]
        for entry in ranked:
            j1, neg_j2 = lexicographic_score(S, store, entry.pair)
            assert j1 == entry.j1
            assert -neg_j2 == pytest.approx(entry.j2)


def test_holdout_split_is_disjoint(small_store):
    split = holdout_split(small_store, 200, seed=4)
    assert split.disjoint
    assert split.build_ids.size + split.query_ids.size == small_store.n
    assert split.build_store.n == small_store.n - 200
    np.testing.assert_array_equal(split.queries[0], small_store.data[split.query_ids[0]])


def test_holdout_split_bounds(small_store):
    with pytest.raises(ConfigError):
        holdout_split(small_store, small_store.n, seed=1)
    with pytest.raises(ConfigError):
        holdout_split(small_store, 0, seed=1)


def test_run_bench_table(small_store):
    cfg = BuildConfig(leaf_threshold=25, num_trees=4, seed=3)
    run = run_bench(small_store, [50, 200, 800], holdout=100, k=10, cfg=cfg, threads=2)
    assert list(run.table.columns) == BENCH_COLUMNS
    assert run.table["budget"].tolist() == [50, 200, 800]
    for col in ("recall_edge", "recall_base"):
        recalls = run.table[col].tolist()
        assert recalls == sorted(recalls)
        assert all(0.0 <= r <= 1.0 for r in recalls)
    assert run.comparison.size_edge_bytes < run.comparison.size_baseline_bytes
    assert run.throughput_edge > 0 and run.throughput_base > 0
    for row in run.table.itertuples():
        assert row.p_loss == pytest.approx(performance_loss(row.recall_edge, row.recall_base))


def test_run_bench_recall_is_deterministic(small_store):
    cfg = BuildConfig(leaf_threshold=25, num_trees=2, seed=3)
    a = run_bench(small_store, [100], holdout=50, cfg=cfg)
    b = run_bench(small_store, [100], holdout=50, cfg=cfg)
    cols = ["budget", "recall_edge", "recall_base", "p_loss"]
    assert a.table[cols].equals(b.table[cols])


def test_leaf_sweep_saturates(small_store):
    cfg = BuildConfig(num_trees=2, seed=3)
    n_build = small_store.n - 100
    frame = leaf_sweep(small_store, [16, 64], [50, n_build], holdout=100, cfg=cfg)
    assert list(frame.columns) == SWEEP_COLUMNS
    assert len(frame) == 4
    assert (frame.loc[frame["budget"] == n_build, "recall"] == 1.0).all()


def test_fit_loglog_recovers_power_law():
    ns = np.array([1e4, 2e4, 4e4, 8e4])
    slope, r2 = fit_loglog(ns, 3e-6 * ns**1.1)
    assert slope == pytest.approx(1.1)
    assert r2 == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        fit_loglog([10], [1.0])


def test_scale_study_table():
    run = scale_study([500, 1000], dim=4, cfg=BuildConfig(num_trees=1, seed=2))
    assert list(run.table.columns) == SCALE_COLUMNS
    assert run.table["n"].tolist() == [500, 1000]
    assert np.isfinite(run.slope)
