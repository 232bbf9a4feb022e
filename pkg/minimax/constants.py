""" Minimax constants for tilts in a Hermite ellipsoid around a Gaussian carrier

The noise is standard Gaussian and the carrier is N(0, sigma^2). A tilt tau lies in
the ellipsoid when sum_j kappa^(2j) <tau, H_j>^2 <= C^2. Both the Pinsker lower bound
and the truncated polynomial upper bound grow like C^e with
e = 2 log(r) / (log(r) + log(kappa)), r^2 = (1 + sigma^2) / sigma^2.
"""
import logging as log
import math
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import bisect

from numerics.static import (
    PUBLISHED_ALPHA_SIGMA1_KAPPA2,
    PUBLISHED_RATIO_SIGMA1_KAPPA2,
    InvalidArgumentError,
    require_positive,
)

PINSKER_FACTOR = 0.8
LARGE_C_FACTOR = 10.0
MU_C_RTOL = 1e-12


@dataclass(frozen=True)
class EllipsoidSpec:
    sigma: float
    kappa: float
    c: float

    def __post_init__(self):
        require_positive(self.sigma, "sigma")
        require_positive(self.c, "c")
        _check_kappa(self.kappa)

    @property
    def exponent(self) -> float:
        return rate_exponent(self.sigma, self.kappa)


@dataclass(frozen=True)
class MinimaxReport:
    sigma: float
    kappa: float
    c: float
    r_sigma: float
    alpha: float
    beta: float
    exponent: float
    p_star: int
    mu_c: float
    j_c: int
    linear_risk: float
    pinsker_lower_bound: float
    poly_risk_bound: float
    minimax_lower_bound: float
    ratio_bound: float
    large_c_warning: bool
    published_alpha: Optional[float] = None
    published_ratio: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def _check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if not math.isfinite(kappa) or kappa <= 1.0:
        raise InvalidArgumentError(f"kappa must be a finite number above 1, got {kappa}")
    return kappa


def r_sigma(sigma: float) -> float:
    """ r_sigma = sqrt((1 + sigma^2) / sigma^2), the per-order noise inflation of the coefficients """
    sigma = require_positive(sigma, "sigma")
    return math.sqrt((1.0 + sigma ** 2) / sigma ** 2)


def rate_exponent(sigma: float, kappa: float) -> float:
    log_r = math.log(r_sigma(sigma))
    return 2.0 * log_r / (log_r + math.log(_check_kappa(kappa)))


def alpha(sigma: float, kappa: float) -> float:
    """ Constant of the Pinsker lower bound alpha * C^e

    :param float sigma: carrier scale
    :param float kappa: ellipsoid decay, above 1
    :return: alpha
    :rtype: float
    """
    kappa = _check_kappa(kappa)
    r2 = r_sigma(sigma) ** 2
    prefactor = PINSKER_FACTOR * r2 * (kappa - 1.0) / ((r2 - 1.0) * (r2 * kappa - 1.0))
    base = (r2 * kappa - 1.0) * (r2 * kappa ** 2 - 1.0) / (r2 * kappa * (kappa - 1.0))
    return prefactor * base ** rate_exponent(sigma, kappa)


def beta(sigma: float, kappa: float) -> float:
    """ Constant of the polynomial-model upper bound beta * C^e """
    kappa = _check_kappa(kappa)
    r = r_sigma(sigma)
    power = 2.0 * math.log(kappa) / (math.log(r) + math.log(kappa))
    return (1.0 + r ** 2) * sigma ** power


def choose_p(sigma: float, kappa: float, c: float) -> int:
    """ Polynomial degree max(2, ceil(log(C / sigma) / log(r kappa)) - 1) """
    c = require_positive(c, "c")
    kappa = _check_kappa(kappa)
    ratio = math.log(c / sigma) / math.log(r_sigma(sigma) * kappa)
    return max(2, math.ceil(ratio) - 1)


def _water_level(mu: float, r2: float, kappa: float) -> float:
    """ sum_j r^(2j) kappa^j (mu - kappa^j)_+ """
    total = 0.0
    j = 1
    while kappa ** j < mu:
        total += r2 ** j * kappa ** j * (mu - kappa ** j)
        j += 1
    return total


def solve_mu_c(sigma: float, kappa: float, c: float) -> Tuple[float, int]:
    """ Solves sum_j r^(2j) kappa^j (mu - kappa^j)_+ = C^2 for mu

    The left side is zero up to mu = kappa and increases strictly after, so the
    root is bracketed by doubling, located by bisection and finished with the
    closed form on the active segment.

    :return: (mu_C, J_C = floor(log(mu_C) / log(kappa)))
    """
    c = require_positive(c, "c")
    kappa = _check_kappa(kappa)
    r2 = r_sigma(sigma) ** 2
    target = c ** 2

    lower, upper = kappa, 2.0 * kappa
    while _water_level(upper, r2, kappa) < target:
        lower, upper = upper, 2.0 * upper
    mu = bisect(lambda value: _water_level(value, r2, kappa) - target, lower, upper,
                xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=2000)

    # linear on the active segment, solve it exactly
    active = [j for j in range(1, 1 + int(math.log(mu) / math.log(kappa)) + 2) if kappa ** j < mu]
    if active:
        slope = sum(r2 ** j * kappa ** j for j in active)
        offset = sum(r2 ** j * kappa ** (2 * j) for j in active)
        exact = (target + offset) / slope
        if kappa ** active[-1] < exact <= kappa ** (active[-1] + 1):
            mu = exact
    residual = abs(_water_level(mu, r2, kappa) - target)
    if residual > 1e-10 * target:
        log.warning(f"mu_C residual {residual:.3e} above tolerance for C={c}")
    j_c = int(math.floor(math.log(mu) / math.log(kappa) + MU_C_RTOL))
    log.debug(f"mu_C={mu:.15g}, J_C={j_c} for sigma={sigma}, kappa={kappa}, C={c}")
    return float(mu), j_c


def pinsker_linear_risk(sigma: float, kappa: float, c: float) -> float:
    """ Risk of the best linear estimator, sum_j r^(2j) (1 - kappa^j / mu_C)_+ """
    mu, _ = solve_mu_c(sigma, kappa, c)
    r2 = r_sigma(sigma) ** 2
    risk = 0.0
    j = 1
    while kappa ** j < mu:
        risk += r2 ** j * (1.0 - kappa ** j / mu)
        j += 1
    return risk


def minimax_report(spec: EllipsoidSpec) -> MinimaxReport:
    """ Assembles the constants, both rate bounds and the linear risk for one ellipsoid

    :param EllipsoidSpec spec:
    :return: MinimaxReport
    """
    sigma, kappa, c = spec.sigma, spec.kappa, spec.c
    exponent = spec.exponent
    a_value = alpha(sigma, kappa)
    b_value = beta(sigma, kappa)
    mu_c, j_c = solve_mu_c(sigma, kappa, c)
    linear_risk = pinsker_linear_risk(sigma, kappa, c)
    large_c_warning = c < LARGE_C_FACTOR * sigma
    if large_c_warning:
        log.warning(f"C={c} is below {LARGE_C_FACTOR} * sigma, the rate bounds are asymptotic in C")
    ratio = b_value / a_value
    if ratio < 1.0:
        log.warning(f"beta/alpha = {ratio:.4g} is below one for sigma={sigma}, kappa={kappa}")
    published = math.isclose(sigma, 1.0) and math.isclose(kappa, 2.0)
    return MinimaxReport(
        sigma=sigma, kappa=kappa, c=c,
        r_sigma=r_sigma(sigma),
        alpha=a_value,
        beta=b_value,
        exponent=exponent,
        p_star=choose_p(sigma, kappa, c),
        mu_c=mu_c,
        j_c=j_c,
        linear_risk=linear_risk,
        pinsker_lower_bound=PINSKER_FACTOR * linear_risk,
        poly_risk_bound=b_value * c ** exponent,
        minimax_lower_bound=a_value * c ** exponent,
        ratio_bound=ratio,
        large_c_warning=large_c_warning,
        published_alpha=PUBLISHED_ALPHA_SIGMA1_KAPPA2 if published else None,
        published_ratio=PUBLISHED_RATIO_SIGMA1_KAPPA2 if published else None,
    )
