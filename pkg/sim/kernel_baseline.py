""" Fourier deconvoluting kernel density estimator on the cyclic domain

The estimate of g has Fourier coefficients
    phi_emp(w) * phi_K(h w) / phi_noise(w),   w = pi k / M,
with phi_emp the empirical characteristic function of the samples, phi_noise(w) =
exp(-w^2 / 2) for standard Gaussian noise and phi_K(t) = (1 - t^2)^3 on |t| <= 1,
the transform of a second-order kernel with compact frequency support.
"""
import logging as log
from typing import Literal, Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import erfc

from numerics.grid import DensityVector, Grid
from numerics.static import InvalidArgumentError, UnstableBandwidthError, check_finite, require_positive

BandwidthRule = Literal["plug-in", "fixed"]

# exp(w^2 / 2) beyond this log-size swamps the empirical characteristic function
MAX_LOG_AMPLIFICATION = 200.0
BANDWIDTH_SEARCH = np.geomspace(0.05, 3.0, 240)
MIN_REFERENCE_VARIANCE = 0.05


def damping(t) -> np.ndarray:
    """ phi_K(t) = (1 - t^2)^3 for |t| <= 1, zero beyond """
    t = np.asarray(t, dtype=float)
    return np.where(np.abs(t) <= 1.0, (1.0 - t ** 2) ** 3, 0.0)


def _noise_log_cf(omega, deconvolve: bool) -> np.ndarray:
    return -0.5 * np.asarray(omega) ** 2 if deconvolve else np.zeros_like(omega)


def reference_mise(h: float, n: int, variance: float, deconvolve: bool = True) -> float:
    """ Exact MISE of the estimator when g is normal with the given variance

    :param float h: bandwidth
    :param int n: sample size
    :param float variance: variance of the normal reference for g
    :param bool deconvolve: False for the plain kernel estimate of the sample density
    :return: MISE
    """
    omega = np.linspace(0.0, 1.0 / h, 2001)
    kernel_sq = damping(h * omega) ** 2
    g_sq = np.exp(-variance * omega ** 2)
    inflation = np.exp(-2.0 * _noise_log_cf(omega, deconvolve))
    variance_term = trapezoid(kernel_sq * (inflation - g_sq), omega) / (np.pi * n)
    bias_inside = trapezoid((1.0 - damping(h * omega)) ** 2 * g_sq, omega)
    # beyond 1/h the kernel transform vanishes and the bias is the whole tail of |phi_g|^2
    tail = 0.5 * np.sqrt(np.pi / variance) * erfc(np.sqrt(variance) / h)
    return float(variance_term + (bias_inside + tail) / np.pi)


def select_bandwidth(samples, deconvolve: bool = True) -> float:
    """ Bandwidth minimizing the normal-reference MISE over a log-spaced search grid

    The reference variance of g is Var(X) - 1 when deconvolving, floored at a small
    positive value.
    """
    samples = check_finite(np.ravel(samples), "samples")
    if samples.size < 2:
        raise InvalidArgumentError("plug-in bandwidth needs at least two samples")
    variance = float(np.var(samples, ddof=1)) - (1.0 if deconvolve else 0.0)
    variance = max(variance, MIN_REFERENCE_VARIANCE)
    risks = [reference_mise(h, samples.size, variance, deconvolve) for h in BANDWIDTH_SEARCH]
    bandwidth = float(BANDWIDTH_SEARCH[int(np.argmin(risks))])
    log.debug(f"plug-in bandwidth {bandwidth:.4g} with reference variance {variance:.4g}")
    return bandwidth


def kernel_deconv_baseline(samples, grid: Grid, bandwidth_rule: BandwidthRule = "plug-in",
                           bandwidth: Optional[float] = None, deconvolve: bool = True) -> DensityVector:
    """ Deconvoluting kernel estimate of g on the grid

    :param samples: observations inside the domain
    :param Grid grid:
    :param str bandwidth_rule: plug-in or fixed
    :param float bandwidth: h for the fixed rule
    :param bool deconvolve: False replaces the noise characteristic function by 1
    :return: clipped and renormalized DensityVector
    """
    samples = check_finite(np.ravel(samples), "samples")
    if samples.size < 1:
        raise InvalidArgumentError("kernel estimate needs at least one sample")
    if bandwidth_rule == "fixed":
        if bandwidth is None:
            raise InvalidArgumentError("fixed bandwidth rule needs a bandwidth")
        h = require_positive(bandwidth, "bandwidth")
    elif bandwidth_rule == "plug-in":
        h = select_bandwidth(samples, deconvolve)
    else:
        raise InvalidArgumentError(f"unknown bandwidth rule '{bandwidth_rule}'")

    period = 2.0 * grid.m_half
    k_max = int(np.floor(period / (2.0 * np.pi * h)))
    omega = 2.0 * np.pi * np.arange(1, k_max + 1) / period
    log_amplification = -_noise_log_cf(omega, deconvolve)
    if omega.size and np.max(log_amplification) > MAX_LOG_AMPLIFICATION:
        raise UnstableBandwidthError(
            f"bandwidth {h:.4g} amplifies noise by exp({np.max(log_amplification):.1f}); use a larger bandwidth")

    phase = np.outer(omega, samples)
    ecf = np.cos(phase).mean(axis=1) + 1j * np.sin(phase).mean(axis=1)
    coefficients = ecf * damping(h * omega) * np.exp(log_amplification)
    waves = np.exp(-1j * np.outer(grid.points, omega))
    values = (1.0 + 2.0 * np.real(waves @ coefficients)) / period
    if not np.all(np.isfinite(values)):
        raise UnstableBandwidthError(f"kernel estimate overflowed at bandwidth {h:.4g}")
    values = np.clip(values, 0.0, None)
    if not np.any(values > 0):
        raise UnstableBandwidthError(f"kernel estimate is nowhere positive at bandwidth {h:.4g}")
    log.debug(f"kernel estimate with h={h:.4g} over {k_max} frequencies, deconvolve={deconvolve}")
    return DensityVector.normalized(grid, values)
