# tests/conftest.py
import os

import pytest
from hypothesis import HealthCheck, settings

from qosm.simulator import run_scenario
from qosm.topology import validate_topology

from .factories import crowded_topology_config, small_scenario, small_topology_config

# --- Hypothesis profiles ---
settings.register_profile("default", max_examples=100, deadline=None)
settings.register_profile("fast", max_examples=20, deadline=None)
settings.register_profile(
    "ci", max_examples=300, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def small_topology():
    return validate_topology(small_topology_config())


@pytest.fixture
def crowded_topology():
    return validate_topology(crowded_topology_config())


@pytest.fixture(scope="session")
def small_run():
    """(TraceTable, GroundTruth) of the 40-interval small scenario."""
    return run_scenario(small_scenario(seed=0, intervals=40))


@pytest.fixture(scope="session")
def small_trace(small_run):
    return small_run[0]
