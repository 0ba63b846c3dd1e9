import numpy as np
import pytest

from subproduct_lab import systems


@pytest.fixture(scope="session")
def ssp2():
    return systems.build_symmetric(2, 8)


@pytest.fixture(scope="session")
def ssp2_small():
    return systems.build_symmetric(2, 5)


@pytest.fixture(scope="session")
def product2():
    return systems.build_product(2, 6)


@pytest.fixture(scope="session")
def golden():
    return systems.build_subshift(2, ["11"], 8)


@pytest.fixture(scope="session")
def fib_quiver():
    return systems.build_quiver(np.array([[1.0, 1.0], [1.0, 0.0]]), 6)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
