""" Wrapped Gaussians and the cyclic Gaussian convolution kernel on [-M, M] """
import logging as log
from dataclasses import dataclass, field

import numpy as np

from numerics.grid import DensityVector, Grid
from numerics.static import (
    DEFAULT_WRAP_TERMS,
    DENSITY_TOLERANCE,
    InvalidArgumentError,
    require_positive,
)

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _check_terms(terms: int) -> int:
    if int(terms) != terms or terms < 1:
        raise InvalidArgumentError(f"wrap terms must be an integer >= 1, got {terms}")
    return int(terms)


def wrapped_series(offsets, sigma: float, m_half: float, terms: int) -> np.ndarray:
    """ Truncated periodization sum_{|j| <= terms} phi_sigma(offset + 2 j M)

    :param offsets: array of differences x - mu
    :param float sigma: Gaussian standard deviation
    :param float m_half: half-width M
    :param int terms: truncation of the image sum
    :return: array with the shape of offsets
    """
    offsets = np.asarray(offsets, dtype=float)
    shifts = 2.0 * m_half * np.arange(-terms, terms + 1)
    z = (offsets[..., None] + shifts) / sigma
    return np.exp(-0.5 * z ** 2).sum(axis=-1) * (_INV_SQRT_2PI / sigma)


def wrapped_gaussian(grid: Grid, sigma: float, terms: int = DEFAULT_WRAP_TERMS, center: float = 0.0) -> DensityVector:
    """ Gaussian with variance sigma^2 wrapped cyclically onto the grid domain

    The quadrature mass differs from one only by the truncation and midpoint
    errors; the values are rescaled to exact unit mass.

    :param Grid grid:
    :param float sigma: standard deviation
    :param int terms: images on each side of the domain
    :param float center: location of the (wrapped) mean
    :return: DensityVector
    :rtype: DensityVector
    """
    sigma = require_positive(sigma, "sigma")
    terms = _check_terms(terms)
    values = wrapped_series(grid.points - center, sigma, grid.m_half, terms)
    mass = float(values @ grid.weights)
    if abs(mass - 1.0) > 1e-6:
        log.warning(f"wrapped gaussian sigma={sigma} has raw mass {mass:.8f} on M={grid.m_half}, n={grid.n_points}")
    return DensityVector(grid=grid, values=values / mass)


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Cyclic noise kernel, values[i, j] = K_M(mu_j, x_i).

    The matrix is circulant on the uniform grid; ``profile[k]`` holds the kernel at
    a separation of k cells, scaled so that every column integrates to one.
    """
    grid: Grid
    values: np.ndarray = field(repr=False)
    profile: np.ndarray = field(repr=False)
    terms: int
    scale: float

    def row(self, x) -> np.ndarray:
        """ Kernel K_M(mu_j, x) for every grid point mu_j, at arbitrary x

        :param x: scalar or 1-D array of observation points
        :return: array of shape (n_points,) or (len(x), n_points)
        """
        x = np.asarray(x, dtype=float)
        offsets = x[..., None] - self.grid.points
        return self.scale * wrapped_series(offsets, 1.0, self.grid.m_half, self.terms)

    def apply(self, g_values) -> np.ndarray:
        """ Convolves grid function(s) with the kernel: sum_j w_j K(x_i, mu_j) g(mu_j)

        :param g_values: array whose last axis runs over the grid
        :return: array of the same shape
        """
        g_values = np.asarray(g_values, dtype=float)
        return (g_values * self.grid.weights) @ self.values.T

    def column_integrals(self) -> np.ndarray:
        return self.grid.weights @ self.values


def cyclic_kernel(grid: Grid, terms: int = DEFAULT_WRAP_TERMS) -> KernelMatrix:
    """ Assembles the cyclic standard-Gaussian kernel on the grid

    :param Grid grid:
    :param int terms: images on each side of the domain
    :return: KernelMatrix
    :rtype: KernelMatrix
    """
    terms = _check_terms(terms)
    n_points = grid.n_points
    separations = grid.spacing * np.arange(n_points)
    profile = wrapped_series(separations, 1.0, grid.m_half, terms)
    # profile[k] and profile[n - k] are the same distance around the circle
    profile = 0.5 * (profile + profile[(-np.arange(n_points)) % n_points])
    raw_mass = grid.spacing * profile.sum()
    profile = profile / raw_mass

    index = np.arange(n_points)
    values = profile[(index[:, None] - index[None, :]) % n_points]
    values.setflags(write=False)
    profile.setflags(write=False)

    kernel = KernelMatrix(grid=grid, values=values, profile=profile, terms=terms, scale=1.0 / raw_mass)
    worst = np.max(np.abs(kernel.column_integrals() - 1.0))
    if worst > DENSITY_TOLERANCE:
        raise InvalidArgumentError(f"kernel columns integrate to 1 only within {worst:.2e}")
    log.debug(f"cyclic kernel on M={grid.m_half}, n={n_points}, terms={terms}, raw mass {raw_mass:.15f}")
    return kernel
