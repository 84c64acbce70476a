"""Shared fixtures: small scenarios with hand-checkable geometry and a seeded
random-instance factory. Long desk-scale runs are gated behind PASS_SLOW=1."""
import os
import sys
from pathlib import Path

_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(_ROOT))

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from channel import UserLayout  # noqa: E402
from harness import sample_layout  # noqa: E402
from scenario import DESK, ScenarioConfig  # noqa: E402

slow = pytest.mark.skipif(not os.environ.get("PASS_SLOW"),
                          reason="desk-scale run; set PASS_SLOW=1")


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


@pytest.fixture()
def small():
    """M=3, N=2, K=2 on a 64-point grid: fast enough for brute-force oracles."""
    return ScenarioConfig(M=3, N=2, K=2, D_x=4.0, D_y=2.0, a=3.0, grid_L=64)


@pytest.fixture()
def small_layout(small):
    return sample_layout(small, 7)


@pytest.fixture()
def desk():
    return DESK


def random_channel(rng, M, K, scale=1.0):
    return scale * (rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K))) / np.sqrt(2)


def users_at(*xy):
    return UserLayout(np.array([[x, y, 0.0] for x, y in xy]))
