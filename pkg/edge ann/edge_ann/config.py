"""Configuration and constants for the edge_ann index and benchmark package."""

import os

# Environment overrides
SEED_ENV_VAR = "EDGE_ANN_SEED"
DEBUG_ENV_VAR = "EDGE_ANN_DEBUG"

DEFAULT_SEED = 42

# Tree construction
DEFAULT_LEAF_THRESHOLD = 50
DEFAULT_NUM_TREES = 25

# Binary anchor optimization
DEFAULT_CANDIDATES = 8
DEFAULT_MAX_ITERS = 64
DEFAULT_SAMPLE_FRACTION = 0.10
# subsets larger than this search anchors on a sample_fraction sample
DEFAULT_SAMPLE_THRESHOLD = 1000

# Retrieval and evaluation
DEFAULT_K = 10
DEFAULT_HOLDOUT = 1000
DEFAULT_BUDGETS = [100, 200, 400, 800, 1600, 3200]

# Leaf sizes swept by `sweep-leaf`
LEAF_SWEEP = [32, 64, 128, 256, 512, 1024]

# N ladder for `scale` (desk scale)
SCALE_LADDER = [10000, 20000, 40000, 80000]

# Synthetic data defaults (desk scale stand-in for large feature datasets)
DEFAULT_SYNTH_N = 20000
DEFAULT_SYNTH_DIM = 64
DEFAULT_SYNTH_CLUSTERS = 16
DEFAULT_SYNTH_STDDEV = 0.05

# Fixed CSV column orders so outputs stay reproducible
BENCH_COLUMNS = [
    "budget",
    "recall_edge",
    "recall_base",
    "ms_edge",
    "ms_base",
    "p_loss",
    "p50_ms_edge",
    "p95_ms_edge",
    "p50_ms_base",
    "p95_ms_base",
]
QUERY_COLUMNS = ["query_idx", "rank", "id", "dist"]
SWEEP_COLUMNS = ["leaf", "build_s", "budget", "recall", "ms_per_query"]
SCALE_COLUMNS = ["n", "build_s"]

DEBUG_LOG_PATH = "edge_ann_debug.log"

# toggles (can be overridden by client scripts)
DEBUG = os.environ.get(DEBUG_ENV_VAR, "") not in ("", "0")


def default_seed() -> int:
    """Seed used when none is given: EDGE_ANN_SEED if set, else DEFAULT_SEED."""
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or raw.strip() == "":
        return DEFAULT_SEED
    return int(raw)
