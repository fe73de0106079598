import math

import numpy as np
import pytest

from edge_ann.errors import ConfigError
from edge_ann.metrics import ComparisonReport, LatencyReport, RecallReport, performance_loss, recall_at_k


def test_recall_at_k_partial_overlap():
    truth = list(range(10))
    retrieved = [0, 1, 2, 3, 4, 5, 6, 90, 91, 92]
    assert recall_at_k(truth, retrieved, 10) == 0.7


def test_recall_at_k_identity():
    assert recall_at_k([4, 8, 15], [15, 8, 4], 3) == 1.0


def test_recall_at_k_rejects_zero_k():
    with pytest.raises(ConfigError):
        recall_at_k([], [], 0)


def test_recall_at_k_matches_set_intersection():
    rng = np.random.default_rng(3)
    for _ in range(100):
        truth = rng.choice(200, size=10, replace=False)
        retrieved = rng.choice(200, size=10, replace=False)
        expected = len(set(truth.tolist()).intersection(retrieved.tolist())) / 10
        assert recall_at_k(truth, retrieved, 10) == expected


def test_performance_loss_values():
    assert performance_loss(0.9, 0.9) == 0.0
    assert performance_loss(0.90, 0.95) == pytest.approx(0.0526315789, rel=1e-8)
    with pytest.raises(ConfigError):
        performance_loss(0.5, 0.0)
    with pytest.raises(ConfigError):
        performance_loss(0.5, -1.0)


def test_performance_loss_scales_with_gap():
    s2 = 0.92
    for gap in (0.03, 0.0585):
        assert performance_loss(s2 * (1 - gap), s2) == pytest.approx(gap)


def test_recall_report_mean():
    report = RecallReport.from_values([1.0, 0.5, 0.0, 0.5], k=10)
    assert report.mean_recall == 0.5
    assert report.n_queries == 4
    assert report.per_query == [1.0, 0.5, 0.0, 0.5]


def test_latency_report_from_timings():
    report = LatencyReport.from_timings([0.001, 0.002, 0.003, 0.010])
    assert report.total_ms == pytest.approx(16.0)
    assert report.per_query_ms == pytest.approx(report.total_ms / report.n_queries)
    assert report.p50_ms == pytest.approx(2.5)
    assert report.p95_ms <= 10.0


def test_comparison_report():
    report = ComparisonReport.build(0.90, 0.95, 600, 1000)
    assert report.p_loss == pytest.approx(performance_loss(0.90, 0.95))
    assert report.size_reduction_fraction == pytest.approx(0.4)
    assert ComparisonReport.build(0.0, 0.0, 1, 2).p_loss is None
    assert set(report.to_dict()) >= {"recall_edge", "recall_baseline", "p_loss"}
    assert not math.isnan(report.to_dict()["size_reduction_fraction"])
