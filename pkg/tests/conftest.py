"""Shared fixtures.

The full default mission run is expensive (~7 s), so it is executed once per
session and shared by every test that inspects the stock scenario.
"""
import time

import numpy as np
import pytest

from mobman.config import ScenarioConfig
from mobman.dynamics import ArmDynamics
from mobman.simulate import run_mission


@pytest.fixture(scope="session")
def default_mission():
    """(MissionResult, wall_seconds) for the stock scenario."""
    t0 = time.perf_counter()
    result = run_mission(ScenarioConfig())
    return result, time.perf_counter() - t0


@pytest.fixture(scope="session")
def model():
    """Arm dynamics with the stock geometry and mass budget."""
    return ArmDynamics()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
