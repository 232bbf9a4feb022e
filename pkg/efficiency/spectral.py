""" Spectrum of the operator P_g and the most favorable statistic families it yields

P_g(mu1, mu2) = integral of sqrt(g(mu1)) K(mu1, x) K(x, mu2) sqrt(g(mu2)) / f(x) dx.
Its leading eigenfunction is sqrt(g) with eigenvalue 1; the next p eigenfunctions,
divided by sqrt(g), are the statistics whose exponential family loses the least
information to the noise.
"""
import logging as log
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.special import rel_entr

from efficiency.relative import rho_multivariate
from expfam.basis import StatisticBasis, custom_basis
from expfam.model import marginal, tilt_density
from numerics.grid import DensityVector, Grid, quad
from numerics.kernels import KernelMatrix
from numerics.linalg import sym_eigen
from numerics.static import (
    DEFAULT_CARRIER_FLOOR,
    DEGENERATE_CARRIER_RTOL,
    DEGENERATE_SPECTRUM_GAP,
    DegenerateCarrierError,
    InvalidArgumentError,
    check_finite,
    require_positive,
    require_same_grid,
)


def floor_carrier(carrier: DensityVector, rel_floor: float = DEFAULT_CARRIER_FLOOR) -> Tuple[DensityVector, float]:
    """ Raises the carrier to at least rel_floor * max and renormalizes

    :param DensityVector carrier:
    :param float rel_floor: floor relative to the peak value
    :return: (floored carrier, absolute floor applied before renormalization)
    """
    rel_floor = require_positive(rel_floor, "rel_floor")
    floor = rel_floor * float(np.max(carrier.values))
    raised = np.maximum(carrier.values, floor)
    lifted = int(np.sum(carrier.values < floor))
    if lifted:
        log.warning(f"carrier floored at {floor:.3e} on {lifted} of {carrier.grid.n_points} grid points")
    return DensityVector.normalized(carrier.grid, raised), floor


def _check_positive(carrier: DensityVector):
    peak = float(np.max(carrier.values))
    low = float(np.min(carrier.values))
    if low <= DEGENERATE_CARRIER_RTOL * peak:
        raise DegenerateCarrierError(
            f"carrier minimum {low:.3e} is not bounded away from zero (peak {peak:.3e}); pass a floor")


def operator_pg(carrier: DensityVector, kernel: KernelMatrix, floor: Optional[float] = None) -> np.ndarray:
    """ Discretized P_g, A[i, j] = sqrt(w_i) P_g(mu_i, mu_j) sqrt(w_j)

    Built as B'B with B[x, j] = K(x, mu_j) sqrt(w_x / f(x)) sqrt(w_j g(mu_j)), so the
    eigenproblem of A is the L2 eigenproblem of the operator.

    :param DensityVector carrier: g, strictly positive on the grid
    :param KernelMatrix kernel:
    :param float floor: optional relative floor applied to the carrier first
    :return: symmetric n x n matrix
    """
    require_same_grid(carrier.grid, kernel.grid, "carrier and kernel")
    if floor is not None:
        carrier, _ = floor_carrier(carrier, floor)
    _check_positive(carrier)
    weights = carrier.grid.weights
    f_values = marginal(kernel, carrier).values
    half = kernel.values * np.sqrt(weights / f_values)[:, None] * np.sqrt(weights * carrier.values)[None, :]
    matrix = half.T @ half
    return 0.5 * (matrix + matrix.T)


@dataclass(frozen=True, eq=False)
class SpectralResult:
    grid: Grid
    carrier: DensityVector = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    eigenfunctions: np.ndarray = field(repr=False)
    favorable_stats: np.ndarray = field(repr=False)
    rho_per_dim: np.ndarray = field(repr=False)
    degenerate_spectrum: bool = False
    carrier_floor: Optional[float] = None
    cross_check_rho: Optional[float] = None

    @property
    def p(self) -> int:
        return self.favorable_stats.shape[0]

    def statistics(self, p: Optional[int] = None) -> np.ndarray:
        """ T_1..T_p as a (p, n) array; any p below the number of eigenfunctions """
        p = self.p if p is None else p
        if p < 1 or p >= self.eigenfunctions.shape[0]:
            raise InvalidArgumentError(f"p must lie in [1, {self.eigenfunctions.shape[0] - 1}], got {p}")
        if p <= self.p:
            return self.favorable_stats[:p]
        return self.eigenfunctions[1:p + 1] / np.sqrt(self.carrier.values)

    def as_basis(self, p: Optional[int] = None) -> StatisticBasis:
        stats = self.statistics(p)
        return StatisticBasis(grid=self.grid, columns=stats, labels=tuple(f"T{j}" for j in range(1, len(stats) + 1)))


def spectrum(carrier: DensityVector, kernel: KernelMatrix, floor: Optional[float] = None):
    """ (carrier used, descending eigenvalues, eigenfunctions as rows with unit L2 norm) """
    used = carrier if floor is None else floor_carrier(carrier, floor)[0]
    eigenvalues, eigenvectors = sym_eigen(operator_pg(used, kernel))
    eigenfunctions = (eigenvectors / np.sqrt(used.grid.weights)[:, None]).T
    return used, eigenvalues, eigenfunctions


def most_favorable(carrier: DensityVector, kernel: KernelMatrix, p: int, floor: Optional[float] = None,
                   cross_check: bool = True) -> SpectralResult:
    """ Most favorable p-dimensional statistic family for the carrier

    :param DensityVector carrier: g0
    :param KernelMatrix kernel:
    :param int p: family dimension
    :param float floor: relative carrier floor, required for carriers with zeros
    :param bool cross_check: recompute rho of the family through I_X and I_mu
    :return: SpectralResult
    """
    n_points = carrier.grid.n_points
    if int(p) != p or p < 1 or p >= n_points - 1:
        raise InvalidArgumentError(f"p must be an integer in [1, {n_points - 2}], got {p}")
    p = int(p)
    used, eigenvalues, eigenfunctions = spectrum(carrier, kernel, floor)

    leading = eigenfunctions[0]
    root = np.sqrt(used.values)
    cosine = abs(quad(used.grid, leading * root)) / np.sqrt(quad(used.grid, leading ** 2) * quad(used.grid, used.values))
    if abs(eigenvalues[0] - 1.0) > 1e-4 or cosine < 1.0 - 1e-6:
        log.warning(f"leading eigenpair off: lambda1={eigenvalues[0]:.8f}, cosine with sqrt(g0)={cosine:.8f}")

    gaps = np.abs(np.diff(eigenvalues[:p + 2]))
    degenerate = bool(np.any(gaps < DEGENERATE_SPECTRUM_GAP * max(eigenvalues[0], 1.0)))
    if degenerate:
        log.warning("repeated eigenvalues among the leading ones, favorable family is not unique")

    favorable = eigenfunctions[1:p + 1] / root
    rho_per_dim = eigenvalues[1:p + 1].copy()
    result = SpectralResult(grid=used.grid, carrier=used, eigenvalues=eigenvalues, eigenfunctions=eigenfunctions,
                            favorable_stats=favorable, rho_per_dim=rho_per_dim, degenerate_spectrum=degenerate,
                            carrier_floor=floor)
    if not cross_check:
        return result
    checked = rho_multivariate(used, kernel, result.as_basis()).rho
    if abs(checked - eigenvalues[p]) > 1e-4:
        log.warning(f"favorable family rho {checked:.6g} differs from lambda_{p + 1}={eigenvalues[p]:.6g}")
    return SpectralResult(grid=used.grid, carrier=used, eigenvalues=eigenvalues, eigenfunctions=eigenfunctions,
                          favorable_stats=favorable, rho_per_dim=rho_per_dim, degenerate_spectrum=degenerate,
                          carrier_floor=floor, cross_check_rho=checked)


def favorable_basis(carrier: DensityVector, kernel: KernelMatrix, p: int, floor: Optional[float] = None):
    """ StatisticBasis of the p most favorable statistics, on the carrier actually used """
    result = most_favorable(carrier, kernel, p, floor=floor, cross_check=False)
    return result.carrier, result.as_basis()


def approx_tilt(spectral: SpectralResult, tau, p: int):
    """ Projection of a tilt tau onto the first p favorable statistics

    :param SpectralResult spectral:
    :param tau: tilt function on the grid
    :param int p: number of favorable statistics used
    :return: (coefficients gamma_j = quad(tau T_j g0), bound (1/2) quad(tau^2 g0) lambda_{p+2})
    """
    tau = check_finite(tau, "tau")
    carrier = spectral.carrier
    if tau.shape != (carrier.grid.n_points,):
        raise InvalidArgumentError(f"tau must have {carrier.grid.n_points} grid values, got shape {tau.shape}")
    if int(p) != p or p < 0 or p + 1 >= spectral.eigenvalues.size:
        raise InvalidArgumentError(f"p must lie in [0, {spectral.eigenvalues.size - 2}], got {p}")
    p = int(p)
    if p == 0:
        coefficients = np.zeros(0)
    else:
        coefficients = quad(carrier.grid, spectral.statistics(p) * (tau * carrier.values))
        coefficients = np.atleast_1d(coefficients)
    energy = quad(carrier.grid, tau ** 2 * carrier.values)
    kl_bound = 0.5 * energy * float(spectral.eigenvalues[p + 1])
    return coefficients, kl_bound


def perturbed_marginal_kl(carrier: DensityVector, kernel: KernelMatrix, tau, tau_approx, n: float) -> float:
    """ n * KL(f_tau || f_approx) for marginals of g0 exp(tau / sqrt(n) - psi)

    :param DensityVector carrier:
    :param KernelMatrix kernel:
    :param tau: tilt defining the true density
    :param tau_approx: tilt of the approximating density
    :param float n: sample size of the local perturbation
    :return: scaled KL divergence, inf when the approximation misses support
    """
    n = require_positive(n, "n")
    grid = carrier.grid
    step = np.array([1.0 / np.sqrt(n)])
    true_g = tilt_density(carrier, custom_basis(grid, [tau]), step)
    approx_g = tilt_density(carrier, custom_basis(grid, [tau_approx]), step)
    f_true = marginal(kernel, true_g).values
    f_approx = marginal(kernel, approx_g).values
    return float(n * quad(grid, rel_entr(f_true, f_approx)))
