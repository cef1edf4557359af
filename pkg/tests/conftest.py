import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hexcover import EXPERIMENT_PARAMS, Environment

settings.register_profile("repo", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture
def params():
    return EXPERIMENT_PARAMS


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def square100():
    return Environment.rectangle(100.0, 100.0)
