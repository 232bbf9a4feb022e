""" Gaussian sequence model Z_j ~ N(gamma_j, r^(2j)) and the truncation estimator """
import logging as log
from dataclasses import dataclass
from typing import Optional

import numpy as np

from minimax.constants import EllipsoidSpec, r_sigma
from numerics.static import InvalidArgumentError, check_finite


@dataclass(frozen=True)
class RiskEstimate:
    mean: float
    standard_error: float
    replicates: int


def _check_p(p) -> int:
    if int(p) != p or p < 0:
        raise InvalidArgumentError(f"p must be a nonnegative integer, got {p}")
    return int(p)


def truncation_risk(spec: EllipsoidSpec, p: int) -> float:
    """ Worst-case risk of keeping Z_1..Z_p: sum_{j<=p} r^(2j) + C^2 kappa^(-2(p+1)) """
    p = _check_p(p)
    r2 = r_sigma(spec.sigma) ** 2
    variance = sum(r2 ** j for j in range(1, p + 1))
    return variance + spec.c ** 2 * spec.kappa ** (-2.0 * (p + 1))


def worst_case_gamma(spec: EllipsoidSpec, p: int, j_max: Optional[int] = None) -> np.ndarray:
    """ Ellipsoid point with all its energy on coordinate p + 1 """
    p = _check_p(p)
    j_max = p + 1 if j_max is None else int(j_max)
    if j_max < p + 1:
        raise InvalidArgumentError(f"j_max={j_max} must be at least p + 1 = {p + 1}")
    gamma = np.zeros(j_max)
    gamma[p] = spec.c * spec.kappa ** (-(p + 1.0))
    return gamma


def simulate_truncation_risk(spec: EllipsoidSpec, p: int, gamma, replicates: int = 1000,
                             seed: int = 0) -> RiskEstimate:
    """ Monte-Carlo risk of the truncation estimator at a fixed gamma

    :param EllipsoidSpec spec:
    :param int p: number of kept coordinates
    :param gamma: true coefficients gamma_1..gamma_J
    :param int replicates:
    :param int seed:
    :return: RiskEstimate with the mean squared error and its standard error
    """
    p = _check_p(p)
    gamma = check_finite(np.ravel(gamma), "gamma")
    if replicates < 2:
        raise InvalidArgumentError(f"need at least 2 replicates, got {replicates}")
    rng = np.random.default_rng(seed)
    scales = r_sigma(spec.sigma) ** np.arange(1, gamma.size + 1)
    draws = gamma + scales * rng.standard_normal((replicates, gamma.size))
    estimates = np.where(np.arange(gamma.size) < p, draws, 0.0)
    losses = np.sum((estimates - gamma) ** 2, axis=1)
    estimate = RiskEstimate(mean=float(losses.mean()), standard_error=float(losses.std(ddof=1) / np.sqrt(replicates)),
                            replicates=replicates)
    log.debug(f"truncation risk at p={p}: {estimate.mean:.6g} +- {estimate.standard_error:.2g}")
    return estimate
