import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from modop.algebra import AlgebraShape
from modop.tolerances import DEFAULT_TOL

settings.register_profile(
    "suite",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture
def tol():
    return DEFAULT_TOL


@pytest.fixture
def shape23():
    return AlgebraShape((2, 3))


@pytest.fixture
def trivial():
    return AlgebraShape((1,))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
