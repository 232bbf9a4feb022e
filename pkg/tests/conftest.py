import numpy as np
import pytest

from expfam.basis import hermite_basis
from numerics.grid import default_m_half, make_grid
from numerics.kernels import cyclic_kernel, wrapped_gaussian


@pytest.fixture(scope="session")
def grid8():
    return make_grid(8.0, 512)


@pytest.fixture(scope="session")
def kernel8(grid8):
    return cyclic_kernel(grid8)


@pytest.fixture(scope="session")
def gauss8(grid8):
    return wrapped_gaussian(grid8, 1.0)


@pytest.fixture(scope="session")
def hermite8(grid8):
    return hermite_basis(grid8, 3)


@pytest.fixture(scope="session")
def fine_grid():
    return make_grid(default_m_half(), 1024)


@pytest.fixture(scope="session")
def fine_kernel(fine_grid):
    return cyclic_kernel(fine_grid)


@pytest.fixture(scope="session")
def fine_gauss(fine_grid):
    return wrapped_gaussian(fine_grid, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
