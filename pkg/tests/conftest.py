import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

# keep test runs out of the working tree's logs/ directory
os.environ.setdefault("GMM_BENCH_LOG_DIR", tempfile.mkdtemp(prefix="gmm-bench-logs-"))
os.environ.setdefault("LOG_LEVEL", "INFO")

from GmmModel import GmmParams, Heterogeneous, Homogeneous  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run full-scale benchmark tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-scale benchmark run, skipped without --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def random_spd(rng: np.random.Generator, d: int, low: float = 0.5, high: float = 8.0) -> np.ndarray:
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    sigma = Q @ np.diag(rng.uniform(low, high, d)) @ Q.T
    return (sigma + sigma.T) / 2.0


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_cluster_homog():
    """Shared diagonal covariance, centers 6 apart on the first axis."""
    return GmmParams(np.array([[0.0, 0.0], [6.0, 0.0]]), Homogeneous(np.diag([1.0, 4.0])))


@pytest.fixture
def three_cluster_hetero():
    sigmas = (np.eye(2), np.diag([0.5, 3.0]), np.array([[2.0, 0.6], [0.6, 1.0]]))
    centers = np.array([[0.0, 0.0], [7.0, 0.0], [0.0, 8.0]])
    return GmmParams(centers, Heterogeneous(sigmas))
