import numpy as np
import pytest

from susybox import gauss_legendre


@pytest.fixture(scope="session")
def rule200():
    return gauss_legendre(200)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)
