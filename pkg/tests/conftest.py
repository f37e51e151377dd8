import numpy as np
import pytest

import obflow as ob


@pytest.fixture(scope="session")
def grid2():
    return ob.Grid(2, 32)


@pytest.fixture(scope="session")
def grid3():
    return ob.Grid(3, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
