import sys
from pathlib import Path

import numpy as np
import pytest


# Ensure the package directory (inside the 'edge ann' folder) is on sys.path
# so tests can import edge_ann regardless of the space in its parent directory.
ROOT = Path(__file__).resolve().parent.parent
pkg_dir = ROOT / "edge ann" / "edge_ann"
if pkg_dir.exists():
    sys.path.insert(0, str(pkg_dir.parent))  # add parent so "edge_ann" is importable

from edge_ann.vecstore import DataGenSpec, VecStore, gen_synthetic  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run acceptance-scale tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale experiment, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="acceptance-scale; use --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def small_store():
    """2000 points, 8 dims, 4 clusters."""
    return gen_synthetic(DataGenSpec(2000, 8, cluster_count=4, cluster_stddev=0.05, seed=7))


@pytest.fixture
def tiny_store():
    return gen_synthetic(DataGenSpec(300, 5, cluster_count=3, cluster_stddev=0.1, seed=3))


@pytest.fixture
def line_store():
    # five points on the x axis: 0, 1, 2, 3, 4
    data = np.zeros((5, 2))
    data[:, 0] = np.arange(5)
    return VecStore(data)
