""" Empirical sequence-model coefficients Z_j built from noisy samples """
import logging as log
from dataclasses import dataclass, field

import numpy as np

from efficiency.spectral import SpectralResult
from expfam.model import marginal
from minimax.constants import r_sigma
from numerics.grid import DensityVector
from numerics.hermite import hermite_matrix
from numerics.kernels import KernelMatrix
from numerics.static import (
    DEGENERATE_VARIANCE,
    DegenerateDirectionError,
    InvalidArgumentError,
    check_finite,
    require_same_grid,
)


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """Z_1..Z_J with the variance each has when the samples come from the carrier."""
    values: np.ndarray = field(repr=False)
    j_max: int
    n: int
    null_variances: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "j_max": self.j_max,
            "n": self.n,
            "values": self.values.tolist(),
            "null_variances": None if self.null_variances is None else self.null_variances.tolist(),
        }


def _check_inputs(samples, j_max):
    samples = check_finite(np.ravel(samples), "samples")
    if samples.size < 1:
        raise InvalidArgumentError("need at least one sample")
    if int(j_max) != j_max or j_max < 1:
        raise InvalidArgumentError(f"j_max must be a positive integer, got {j_max}")
    return samples, int(j_max)


def empirical_coefficients(samples, sigma: float, j_max: int) -> CoefficientVector:
    """ Z_j = n^(-1/2) r^j sum_i H_j(X_i / sqrt(1 + sigma^2)), j = 1..j_max

    :param samples: observations X_i = mu_i + N(0, 1)
    :param float sigma: scale of the Gaussian carrier
    :param int j_max: number of coefficients
    :return: CoefficientVector
    """
    samples, j_max = _check_inputs(samples, j_max)
    r = r_sigma(sigma)
    orders = np.arange(1, j_max + 1)
    sums = hermite_matrix(j_max, samples / np.sqrt(1.0 + sigma ** 2))[1:].sum(axis=1)
    values = r ** orders * sums / np.sqrt(samples.size)
    return CoefficientVector(values=values, j_max=j_max, n=samples.size, null_variances=r ** (2.0 * orders))


def general_coefficients(samples, spectral: SpectralResult, carrier: DensityVector, kernel: KernelMatrix,
                         j_max: int) -> CoefficientVector:
    """ Z_j = n^(-1/2) rho_j^(-1) sum_i U_j(X_i) with U_j = K(T_j g0) / f0

    U_j is the posterior mean of the j-th favorable statistic, interpolated between
    grid points; rho_j is the matching eigenvalue lambda_{j+1} of P_g.

    :param samples: observations inside the domain
    :param SpectralResult spectral: spectrum of the same carrier and kernel
    :param DensityVector carrier: g0
    :param KernelMatrix kernel:
    :param int j_max: number of coefficients
    :return: CoefficientVector
    """
    samples, j_max = _check_inputs(samples, j_max)
    require_same_grid(carrier.grid, spectral.grid, "carrier and spectrum")
    require_same_grid(carrier.grid, kernel.grid, "carrier and kernel")
    grid = carrier.grid
    outside = np.flatnonzero(~grid.contains(samples))
    if outside.size:
        raise InvalidArgumentError(f"{outside.size} samples outside the domain, first at index {outside[0]}")

    rho = spectral.eigenvalues[1:j_max + 1]
    if rho.size < j_max:
        raise InvalidArgumentError(f"spectrum has only {rho.size} nontrivial eigenvalues, asked for {j_max}")
    weak = np.flatnonzero(rho <= DEGENERATE_VARIANCE)
    if weak.size:
        raise DegenerateDirectionError(f"eigenvalue rho_{weak[0] + 1} = {rho[weak[0]]:.3e} is numerically zero")

    f0 = marginal(kernel, carrier).values
    posterior = kernel.apply(spectral.statistics(j_max) * carrier.values) / f0
    sums = grid.interpolate(posterior, samples).sum(axis=-1)
    values = sums / (rho * np.sqrt(samples.size))
    log.debug(f"general coefficients from {samples.size} samples, j_max={j_max}")
    return CoefficientVector(values=values, j_max=j_max, n=samples.size, null_variances=1.0 / rho)
