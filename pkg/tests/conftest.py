import numpy as np
import pytest

from hardybound.grid import GridSpec


@pytest.fixture
def unit():
    return GridSpec.cube(1, 0.0, 1.0, 1 / 256)


@pytest.fixture
def line():
    return GridSpec.cube(1, -8.0, 8.0, 1 / 256)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
