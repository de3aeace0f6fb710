import numpy as np
import pytest

from gaudin.model import new_model
from gaudin.solver import solve_all_sectors


@pytest.fixture(scope="session")
def model4():
    return new_model([0.1, 0.7, 1.3, 2.0], 0.8)


@pytest.fixture(scope="session")
def solved4(model4):
    return solve_all_sectors(model4)


@pytest.fixture(scope="session")
def model6():
    return new_model([0.05, 0.31, 0.58, 0.94, 1.27, 1.66], 0.6)


@pytest.fixture(scope="session")
def solved6(model6):
    return solve_all_sectors(model6)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def jittered_levels(rng, n, span=1.0):
    """Distinct levels: a grid with moderate jitter, decent spacing."""
    base = np.linspace(0.0, span, n)
    if n == 1:
        return base
    jitter = rng.uniform(-0.3, 0.3, size=n) * span / n
    return np.sort(base + jitter)
