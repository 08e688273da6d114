"""
Shared fixtures and the `slow` marker.
"""
import os
import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from modules.encoder import ActionEncoder, StateEncoder
from modules.gridworld import GridSpec, enumerate_transitions, zero_shot_split


RUN_SLOW_ENV = "HOLOWORLD_RUN_SLOW"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-scale reproduction runs (set HOLOWORLD_RUN_SLOW=1)")


def pytest_collection_modifyitems(config, items):
    if os.environ.get(RUN_SLOW_ENV) == "1":
        return
    skip_slow = pytest.mark.skip(reason=f"set {RUN_SLOW_ENV}=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def lattice_encoders(g: GridSpec, dim: int = 256, seed: int = 0) -> tuple[StateEncoder, ActionEncoder]:
    """Encoders with phi_S(r, c) = r*u + c*v, so every non-wall transition binds exactly."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(-np.pi, np.pi, size=dim)
    v = rng.uniform(-np.pi, np.pi, size=dim)
    theta_s = np.stack([r * u + c * v for r in range(g.rows) for c in range(g.cols)], axis=1)
    theta_a = np.stack([-u, u, -v, v], axis=1)
    return StateEncoder(theta_s), ActionEncoder(theta_a)


@pytest.fixture
def grid():
    return GridSpec(10, 10)


@pytest.fixture
def small_grid():
    return GridSpec(4, 4)


@pytest.fixture
def small_split(small_grid):
    return zero_shot_split(enumerate_transitions(small_grid), 0.25, seed=0)


@pytest.fixture
def lattice(grid):
    return lattice_encoders(grid)
