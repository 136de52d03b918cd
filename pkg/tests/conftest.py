import numpy as np
import pytest

from ghostpen import SolverConfig, get_problem


@pytest.fixture
def cfg():
    return SolverConfig()


@pytest.fixture
def prob_a():
    return get_problem("prob_A")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
