""" Sufficient statistics T(mu) for exponential-family tilts of a carrier """
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from numerics.grid import DensityVector, Grid, quad
from numerics.hermite import hermite_matrix
from numerics.static import (
    DEGENERATE_BASIS_RTOL,
    InvalidArgumentError,
    check_finite,
    require_positive,
    require_same_grid,
)


@dataclass(frozen=True, eq=False)
class StatisticBasis:
    """p real functions on a grid, stored as a (p, n_points) array."""
    grid: Grid
    columns: np.ndarray = field(repr=False)
    labels: Tuple[str, ...] = ()

    def __post_init__(self):
        columns = check_finite(self.columns, "basis columns")
        if columns.ndim == 1:
            columns = columns[None, :]
        if columns.ndim != 2 or columns.shape[1] != self.grid.n_points or columns.shape[0] < 1:
            raise InvalidArgumentError(f"basis needs shape (p, {self.grid.n_points}), got {columns.shape}")
        columns = columns.copy()
        columns.setflags(write=False)
        object.__setattr__(self, "columns", columns)
        labels = tuple(self.labels) or tuple(f"T{j + 1}" for j in range(columns.shape[0]))
        if len(labels) != columns.shape[0]:
            raise InvalidArgumentError(f"{len(labels)} labels for {columns.shape[0]} statistics")
        object.__setattr__(self, "labels", labels)

    @property
    def p(self) -> int:
        return self.columns.shape[0]

    def mean(self, density: DensityVector) -> np.ndarray:
        """ Vector of E[T_k] under a grid density """
        require_same_grid(self.grid, density.grid, "basis and density")
        return quad(self.grid, self.columns * density.values)

    def covariance(self, density: DensityVector) -> np.ndarray:
        """ Covariance matrix of T under a grid density """
        centered = self.columns - self.mean(density)[:, None]
        weighted = centered * (density.values * self.grid.weights)
        cov = weighted @ centered.T
        return 0.5 * (cov + cov.T)

    def is_independent(self, carrier: DensityVector) -> bool:
        """ True when the carrier-weighted Gram matrix of the columns is well conditioned """
        weighted = self.columns * np.sqrt(carrier.values * self.grid.weights)
        gram = weighted @ weighted.T
        diag = np.sqrt(np.clip(np.diag(gram), 1e-300, None))
        singular = np.linalg.svd(gram / np.outer(diag, diag), compute_uv=False)
        return bool(singular[-1] > DEGENERATE_BASIS_RTOL)

    def transformed(self, matrix) -> "StatisticBasis":
        """ Basis Q.T for a p x p (or q x p) matrix Q """
        matrix = check_finite(matrix, "transform")
        if matrix.ndim != 2 or matrix.shape[1] != self.p:
            raise InvalidArgumentError(f"transform must have {self.p} columns, got shape {matrix.shape}")
        return StatisticBasis(grid=self.grid, columns=matrix @ self.columns)

    def combination(self, coefficients) -> np.ndarray:
        """ Grid values of a . T """
        return np.asarray(coefficients, dtype=float) @ self.columns

    def standardized(self, carrier: DensityVector):
        """ Centered, unit-variance copy of the basis under the carrier

        Constant columns keep unit scale so they stay constant (zero) rather than blow up.

        :param DensityVector carrier:
        :return: (standardized basis, shift vector, scale vector) with T = shift + scale * T_std
        """
        shift = self.mean(carrier)
        scale = np.sqrt(np.clip(np.diag(self.covariance(carrier)), 0.0, None))
        scale[scale <= 0] = 1.0
        columns = (self.columns - shift[:, None]) / scale[:, None]
        return StatisticBasis(grid=self.grid, columns=columns, labels=self.labels), shift, scale


def polynomial_basis(grid: Grid, p: int, scale: float = 1.0) -> StatisticBasis:
    """ Monomials (mu / scale)^j for j = 1..p, the log-polynomial family

    :param Grid grid:
    :param int p: degree
    :param float scale: optional unit for mu; changes eta but not the family
    :return: StatisticBasis
    """
    p = _check_dimension(p)
    scale = require_positive(scale, "scale")
    powers = np.arange(1, p + 1)[:, None]
    columns = (grid.points / scale)[None, :] ** powers
    return StatisticBasis(grid=grid, columns=columns, labels=tuple(f"mu^{j}" for j in range(1, p + 1)))


def hermite_basis(grid: Grid, p: int, sigma: float = 1.0) -> StatisticBasis:
    """ Normalized Hermite polynomials H_j(mu / sigma), j = 1..p """
    p = _check_dimension(p)
    sigma = require_positive(sigma, "sigma")
    columns = hermite_matrix(p, grid.points / sigma)[1:]
    return StatisticBasis(grid=grid, columns=columns, labels=tuple(f"H{j}" for j in range(1, p + 1)))


def custom_basis(grid: Grid, columns: Sequence, labels: Sequence[str] = ()) -> StatisticBasis:
    return StatisticBasis(grid=grid, columns=np.atleast_2d(np.asarray(columns, dtype=float)), labels=tuple(labels))


def _check_dimension(p) -> int:
    if int(p) != p or p < 1:
        raise InvalidArgumentError(f"basis dimension p must be a positive integer, got {p}")
    return int(p)
