import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import oracles

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def frozen():
    return oracles.load()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
