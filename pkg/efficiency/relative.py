""" Relative efficiency of noisy versus direct observation for a statistic family """
import logging as log
from dataclasses import dataclass, field

import numpy as np

from expfam.basis import StatisticBasis, custom_basis
from expfam.model import exp_family, fisher_mu, fisher_x
from numerics.grid import DensityVector
from numerics.kernels import KernelMatrix
from numerics.linalg import fix_signs, psd_inverse_sqrt, sym_eigen
from numerics.static import (
    DEGENERATE_BASIS_RTOL,
    DEGENERATE_VARIANCE,
    DegenerateBasisError,
    DegenerateStatisticError,
    require_same_grid,
)


@dataclass(frozen=True, eq=False)
class EfficiencyReport:
    """rho = min over directions a of a' I_X a / a' I_mu a, attained at worst_direction."""
    rho: float
    worst_direction: np.ndarray
    i_mu: np.ndarray = field(repr=False)
    i_x: np.ndarray = field(repr=False)
    generalized_eigenvalues: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "worst_direction": self.worst_direction.tolist(),
            "i_mu": self.i_mu.tolist(),
            "i_x": self.i_x.tolist(),
            "generalized_eigenvalues": None if self.generalized_eigenvalues is None
            else self.generalized_eigenvalues.tolist(),
        }


def information_pair(carrier: DensityVector, kernel: KernelMatrix, basis: StatisticBasis):
    """ (I_mu, I_X) of the family through the carrier, i.e. at eta = 0 """
    require_same_grid(carrier.grid, basis.grid, "carrier and basis")
    model = exp_family(carrier, basis, kernel)
    return fisher_mu(model), fisher_x(model)


def rho_univariate(carrier: DensityVector, kernel: KernelMatrix, t) -> float:
    """ Var[E[t(mu) | X]] / Var[t(mu)] under the carrier

    :param DensityVector carrier: g0
    :param KernelMatrix kernel:
    :param t: statistic values on the grid
    :return: ratio in [0, 1]
    :rtype: float
    """
    basis = custom_basis(carrier.grid, np.asarray(t, dtype=float)[None, :])
    i_mu, i_x = information_pair(carrier, kernel, basis)
    variance = float(i_mu[0, 0])
    if variance <= DEGENERATE_VARIANCE:
        raise DegenerateStatisticError(f"statistic has variance {variance:.3e} under the carrier")
    return float(i_x[0, 0]) / variance


def rho_multivariate(carrier: DensityVector, kernel: KernelMatrix, basis: StatisticBasis) -> EfficiencyReport:
    """ Smallest generalized eigenvalue of (I_X, I_mu) and its direction

    With Q' I_mu Q = I, rho is the smallest eigenvalue of Q' I_X Q and the worst
    direction is Q b* for the matching eigenvector b*, scaled to unit length.

    :param DensityVector carrier:
    :param KernelMatrix kernel:
    :param StatisticBasis basis:
    :return: EfficiencyReport
    """
    i_mu, i_x = information_pair(carrier, kernel, basis)
    q_matrix, mu_eigenvalues = psd_inverse_sqrt(i_mu, rtol=DEGENERATE_BASIS_RTOL)
    if q_matrix is None:
        raise DegenerateBasisError(
            f"statistics are rank deficient under the carrier, I_mu eigenvalues {mu_eigenvalues.tolist()}")
    eigenvalues, eigenvectors = sym_eigen(q_matrix.T @ i_x @ q_matrix)
    direction = q_matrix @ eigenvectors[:, -1]
    direction = fix_signs((direction / np.linalg.norm(direction))[:, None])[:, 0]
    rho = float(eigenvalues[-1])
    log.debug(f"relative efficiency {rho:.6g} over {basis.p} statistics")
    return EfficiencyReport(rho=rho, worst_direction=direction, i_mu=i_mu, i_x=i_x,
                            generalized_eigenvalues=eigenvalues)
