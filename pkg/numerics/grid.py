""" Uniform midpoint grids on [-M, M], quadrature and grid densities """
import logging as log
from dataclasses import dataclass, field

import numpy as np

from numerics.static import (
    DEFAULT_DOMAIN_SCALE,
    DENSITY_TOLERANCE,
    MIN_GRID_POINTS,
    RECOMMENDED_GRID_POINTS,
    WEIGHT_SUM_RTOL,
    InvalidArgumentError,
    check_finite,
    require_positive,
    require_same_grid,
)


@dataclass(frozen=True, eq=False)
class Grid:
    """Midpoint discretization of the cyclic domain [-M, M].

    Points are cell midpoints with spacing h = 2M / n_points, every weight is h.
    """
    m_half: float
    n_points: int
    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def spacing(self) -> float:
        return 2.0 * self.m_half / self.n_points

    def contains(self, x) -> np.ndarray:
        """ Boolean mask of values inside the closed domain [-M, M]

        :param x: scalar or array of positions
        :return: mask with the shape of x
        """
        x = np.asarray(x, dtype=float)
        return (x >= -self.m_half) & (x <= self.m_half)

    def wrap(self, x) -> np.ndarray:
        """ Folds positions onto [-M, M) with the cyclic convention of the domain """
        x = np.asarray(x, dtype=float)
        period = 2.0 * self.m_half
        return np.mod(x + self.m_half, period) - self.m_half

    def locate(self, x):
        """ Cyclic linear-interpolation stencil for positions x

        Returns (left index, right index, fraction) such that a grid function v is
        interpolated as (1 - t) * v[left] + t * v[right]. Positions in the half cells
        at either end interpolate between the last and the first point.

        :param x: positions inside [-M, M]
        :return: tuple (left, right, fraction)
        """
        u = (self.wrap(x) + self.m_half) / self.spacing - 0.5
        base = np.floor(u)
        fraction = u - base
        left = np.mod(base.astype(np.int64), self.n_points)
        right = np.mod(left + 1, self.n_points)
        return left, right, fraction

    def interpolate(self, values, x) -> np.ndarray:
        """ Cyclic linear interpolation of grid values (last axis) at positions x """
        values = np.asarray(values, dtype=float)
        left, right, fraction = self.locate(x)
        return (1.0 - fraction) * values[..., left] + fraction * values[..., right]

    def nearest_index(self, x: float) -> int:
        left, right, fraction = self.locate(np.asarray([x]))
        return int(right[0] if fraction[0] >= 0.5 else left[0])

    def indicator(self, lower: float, upper: float) -> np.ndarray:
        """ 0/1 vector of grid points inside [lower, upper] """
        return ((self.points >= lower) & (self.points <= upper)).astype(float)


def default_m_half(sigma: float = 1.0, data_range: float = 0.0) -> float:
    """ M = 12 max(sigma, 1), widened to cover |x| up to data_range """
    sigma = require_positive(sigma, "sigma")
    return max(DEFAULT_DOMAIN_SCALE * max(sigma, 1.0), float(data_range))


def make_grid(m_half: float, n_points: int) -> Grid:
    """ Builds the uniform midpoint grid on [-m_half, m_half]

    :param float m_half: half-width M of the domain
    :param int n_points: number of cells
    :return: Grid with midpoints and equal quadrature weights
    :rtype: Grid
    """
    m_half = require_positive(m_half, "m_half")
    if int(n_points) != n_points or n_points < MIN_GRID_POINTS:
        raise InvalidArgumentError(f"n_points must be an integer >= {MIN_GRID_POINTS}, got {n_points}")
    n_points = int(n_points)
    if n_points < RECOMMENDED_GRID_POINTS:
        log.warning(f"grid with only {n_points} points; quadrature will be coarse")

    spacing = 2.0 * m_half / n_points
    points = -m_half + spacing * (np.arange(n_points) + 0.5)
    weights = np.full(n_points, spacing)
    points.setflags(write=False)
    weights.setflags(write=False)

    if abs(weights.sum() - 2.0 * m_half) > WEIGHT_SUM_RTOL * 2.0 * m_half:
        raise InvalidArgumentError(f"weights do not sum to 2M for M={m_half}, n={n_points}")
    return Grid(m_half=m_half, n_points=n_points, points=points, weights=weights)


def quad(grid: Grid, f_values) -> float:
    """ Midpoint-rule integral of grid function values over the domain

    Extra leading axes are allowed; the last axis must run over the grid.

    :param Grid grid:
    :param f_values: values at the grid points
    :return: Integral (float, or array for stacked inputs)
    """
    f_values = np.asarray(f_values, dtype=float)
    if f_values.shape[-1:] != (grid.n_points,):
        raise InvalidArgumentError(f"expected {grid.n_points} values on the last axis, got shape {f_values.shape}")
    result = f_values @ grid.weights
    return float(result) if np.ndim(result) == 0 else result


@dataclass(frozen=True, eq=False)
class DensityVector:
    """Nonnegative grid function integrating to one."""
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = check_finite(self.values, "density")
        if values.shape != (self.grid.n_points,):
            raise InvalidArgumentError(f"density needs {self.grid.n_points} values, got shape {values.shape}")
        if np.any(values < 0):
            raise InvalidArgumentError(f"density has negative values (min {values.min():.3e})")
        mass = quad(self.grid, values)
        if abs(mass - 1.0) > DENSITY_TOLERANCE:
            raise InvalidArgumentError(f"density integrates to {mass:.12f}, not 1")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def normalized(cls, grid: Grid, values) -> "DensityVector":
        """ Builds a density from nonnegative values, rescaling them to unit mass

        :param Grid grid:
        :param values: nonnegative grid values with positive integral
        :return: DensityVector
        """
        values = check_finite(values, "density")
        if np.any(values < 0):
            raise InvalidArgumentError("density values must be nonnegative")
        mass = quad(grid, values)
        if mass <= 0:
            raise InvalidArgumentError("density values have zero mass on the grid")
        return cls(grid=grid, values=values / mass)

    def mass(self) -> float:
        return quad(self.grid, self.values)

    def mean(self) -> float:
        return quad(self.grid, self.grid.points * self.values)

    def variance(self) -> float:
        centered = self.grid.points - self.mean()
        return quad(self.grid, centered ** 2 * self.values)

    def mass_between(self, lower: float, upper: float) -> float:
        return quad(self.grid, self.grid.indicator(lower, upper) * self.values)

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.values * self.grid.weights)

    def same_grid(self, other: "DensityVector"):
        require_same_grid(self.grid, other.grid, "densities")
