import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from supersinglet.families import family_for, four_projector_family, rank_one_family

settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def four3():
    return family_for(3, 4)


@pytest.fixture(scope="session")
def rank3():
    return rank_one_family(3)


@pytest.fixture(scope="session")
def four5():
    return four_projector_family(2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
