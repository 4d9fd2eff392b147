import numpy as np
import pytest

from patrecon.grid import boundary_sensors, make_grid, make_medium
from patrecon.operators import PATOperator


@pytest.fixture(scope="session")
def small_grid():
    return make_grid(21, 2)


@pytest.fixture(scope="session")
def small_op(small_grid):
    """Default heterogeneous, damped medium on a coarse grid."""
    medium = make_medium(small_grid)
    return PATOperator(medium, boundary_sensors(small_grid), 51, 2.5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
