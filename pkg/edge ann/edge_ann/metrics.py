"""Retrieval metrics and the report records the bench harness emits."""
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import ConfigError


def recall_at_k(ground_truth: Sequence[int], retrieved: Sequence[int], k: int) -> float:
    """|ground_truth & retrieved| / k."""
    if k <= 0:
        raise ConfigError("k must be positive")
    return len(set(int(i) for i in ground_truth) & set(int(i) for i in retrieved)) / k


def performance_loss(s1: float, s2: float) -> float:
    """Relative recall gap (s2 - s1) / s2 of s1 (anchor index) against s2 (baseline)."""
    if not s2 > 0:
        raise ConfigError(f"baseline score must be positive, got {s2}")
    return (s2 - s1) / s2


@dataclass
class RecallReport:
    n_queries: int
    k: int
    mean_recall: float
    per_query: Optional[List[float]] = field(default=None, repr=False)

    @classmethod
    def from_values(cls, values: Sequence[float], k: int, keep_per_query: bool = True) -> "RecallReport":
        values = [float(v) for v in values]
        mean = float(np.mean(values)) if values else 0.0
        return cls(len(values), k, mean, values if keep_per_query else None)


@dataclass
class LatencyReport:
    total_ms: float
    per_query_ms: float
    n_queries: int
    p50_ms: float = 0.0
    p95_ms: float = 0.0

    @classmethod
    def from_timings(cls, seconds: Sequence[float]) -> "LatencyReport":
        ms = np.asarray(seconds, dtype=np.float64) * 1000.0
        if ms.size == 0:
            return cls(0.0, 0.0, 0)
        total = float(ms.sum())
        return cls(
            total_ms=total,
            per_query_ms=total / ms.size,
            n_queries=int(ms.size),
            p50_ms=float(np.percentile(ms, 50)),
            p95_ms=float(np.percentile(ms, 95)),
        )


@dataclass
class ComparisonReport:
    recall_edge: float
    recall_baseline: float
    p_loss: Optional[float]
    size_edge_bytes: int
    size_baseline_bytes: int
    size_reduction_fraction: float

    @classmethod
    def build(cls, recall_edge, recall_baseline, size_edge_bytes, size_baseline_bytes) -> "ComparisonReport":
        p_loss = performance_loss(recall_edge, recall_baseline) if recall_baseline > 0 else None
        reduction = (size_baseline_bytes - size_edge_bytes) / size_baseline_bytes
        return cls(recall_edge, recall_baseline, p_loss, size_edge_bytes, size_baseline_bytes, reduction)

    def to_dict(self) -> dict:
        return asdict(self)
