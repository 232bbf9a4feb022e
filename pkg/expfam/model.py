""" Exponential-family tilts g_eta = g0 exp(eta.T - psi) and their noised marginals """
import logging as log
from dataclasses import dataclass, field

import numpy as np

from expfam.basis import StatisticBasis
from numerics.grid import DensityVector, quad
from numerics.kernels import KernelMatrix
from numerics.static import (
    MARGINAL_FLOOR,
    DegenerateMarginalError,
    InvalidArgumentError,
    NumericOverflowError,
    check_finite,
    require_same_grid,
)


def _check_eta(basis: StatisticBasis, eta) -> np.ndarray:
    eta = check_finite(np.atleast_1d(eta), "eta")
    if eta.shape != (basis.p,):
        raise InvalidArgumentError(f"eta must have {basis.p} entries, got shape {eta.shape}")
    return eta


def log_partition(carrier: DensityVector, basis: StatisticBasis, eta) -> float:
    """ psi(eta) = log quad(g0 exp(eta.T)), evaluated with max-subtraction

    :param DensityVector carrier: g0
    :param StatisticBasis basis: T
    :param eta: natural parameter
    :return: psi
    :rtype: float
    """
    require_same_grid(carrier.grid, basis.grid, "carrier and basis")
    eta = _check_eta(basis, eta)
    exponent = basis.combination(eta)
    support = carrier.values > 0
    if not np.any(support):
        raise InvalidArgumentError("carrier has no mass on the grid")
    top = np.max(exponent[support])
    if not np.isfinite(top):
        raise NumericOverflowError(f"tilt exponent is not finite for eta={eta.tolist()}")
    with np.errstate(over="ignore", invalid="ignore"):
        scaled = np.where(support, carrier.values * np.exp(exponent - top), 0.0)
        total = quad(carrier.grid, scaled)
    if not np.isfinite(total) or total <= 0:
        raise NumericOverflowError(f"normalizer is {total} for eta={eta.tolist()}")
    return float(top + np.log(total))


def tilt_density(carrier: DensityVector, basis: StatisticBasis, eta) -> DensityVector:
    """ g_eta(mu) = g0(mu) exp[eta.T(mu) - psi(eta)] on the grid """
    eta = _check_eta(basis, eta)
    if not np.any(eta):
        return carrier
    psi = log_partition(carrier, basis, eta)
    with np.errstate(over="ignore", under="ignore"):
        values = np.where(carrier.values > 0, carrier.values * np.exp(basis.combination(eta) - psi), 0.0)
    return DensityVector(grid=carrier.grid, values=values)


def marginal(kernel: KernelMatrix, g: DensityVector) -> DensityVector:
    """ f(x_i) = sum_j w_j K(x_i, mu_j) g(mu_j), the law of X = mu + noise """
    require_same_grid(kernel.grid, g.grid, "kernel and density")
    values = np.clip(kernel.apply(g.values), 0.0, None)
    return DensityVector(grid=g.grid, values=values)


@dataclass(frozen=True, eq=False)
class ExpFamModel:
    carrier: DensityVector
    basis: StatisticBasis
    kernel: KernelMatrix
    eta: np.ndarray
    psi: float
    g_eta: DensityVector = field(repr=False)
    f_eta: DensityVector = field(repr=False)

    @property
    def grid(self):
        return self.carrier.grid

    @property
    def p(self) -> int:
        return self.basis.p

    def stat_mean(self) -> np.ndarray:
        return self.basis.mean(self.g_eta)

    def numerators(self) -> np.ndarray:
        """ (p, n) array of sum_j w_j K(x_i, mu_j) T_k(mu_j) g_eta(mu_j) """
        return self.kernel.apply(self.basis.columns * self.g_eta.values)


def exp_family(carrier: DensityVector, basis: StatisticBasis, kernel: KernelMatrix, eta=None) -> ExpFamModel:
    """ Builds the tilted model with cached psi, g_eta and marginal f_eta

    :param DensityVector carrier:
    :param StatisticBasis basis:
    :param KernelMatrix kernel:
    :param eta: parameter vector (zeros when omitted)
    :return: ExpFamModel
    """
    require_same_grid(carrier.grid, kernel.grid, "carrier and kernel")
    eta = np.zeros(basis.p) if eta is None else _check_eta(basis, eta)
    psi = log_partition(carrier, basis, eta)
    g_eta = tilt_density(carrier, basis, eta)
    f_eta = marginal(kernel, g_eta)
    eta = eta.copy()
    eta.setflags(write=False)
    return ExpFamModel(carrier=carrier, basis=basis, kernel=kernel, eta=eta, psi=psi, g_eta=g_eta, f_eta=f_eta)


def _kernel_rows(model: ExpFamModel, x):
    x = np.asarray(x, dtype=float)
    if not np.all(model.grid.contains(x)):
        raise InvalidArgumentError(f"x outside the domain [-{model.grid.m_half}, {model.grid.m_half}]")
    return x, model.kernel.row(x) * (model.g_eta.values * model.grid.weights)


def log_marginal(model: ExpFamModel, x):
    """ log f_eta(x) with the kernel evaluated exactly at x """
    x, rows = _kernel_rows(model, x)
    f_x = rows.sum(axis=-1)
    if np.any(f_x < MARGINAL_FLOOR):
        raise DegenerateMarginalError(f"marginal density underflows at x={x}")
    result = np.log(f_x)
    return float(result) if np.ndim(result) == 0 else result


def posterior_mean_stat(model: ExpFamModel, x) -> np.ndarray:
    """ E_eta[T(mu) | X = x] by quadrature of T K(x, .) g_eta / f_eta(x)

    :param ExpFamModel model:
    :param x: observation(s) inside the domain
    :return: array of shape (p,) for scalar x, (len(x), p) otherwise
    """
    x, rows = _kernel_rows(model, x)
    f_x = rows.sum(axis=-1)
    if np.any(f_x < MARGINAL_FLOOR):
        raise DegenerateMarginalError(f"marginal density below {MARGINAL_FLOOR} at x={x}")
    numer = rows @ model.basis.columns.T
    return numer / np.asarray(f_x)[..., None]


def score(model: ExpFamModel, x) -> np.ndarray:
    """ Gradient in eta of log f_eta(x): E[T | X = x] - E[T] """
    return posterior_mean_stat(model, x) - model.stat_mean()


def fisher_mu(model: ExpFamModel) -> np.ndarray:
    """ Information in a direct mu-sample: Var_eta[T(mu)] """
    return model.basis.covariance(model.g_eta)


def grid_posterior_means(model: ExpFamModel):
    """ E[T | X = x_i] at every grid point together with f_eta(x_i)

    :return: ((p, n) posterior means, (n,) marginal values)
    """
    f_values = model.f_eta.values
    if np.any(f_values < MARGINAL_FLOOR):
        log.debug(f"marginal has {int(np.sum(f_values < MARGINAL_FLOOR))} grid values below the floor")
    safe = np.maximum(f_values, MARGINAL_FLOOR)
    return model.numerators() / safe, f_values


def fisher_x(model: ExpFamModel) -> np.ndarray:
    """ Information in a noisy X-sample: Var over X ~ f_eta of E[T | X] """
    means, f_values = grid_posterior_means(model)
    centered = means - model.stat_mean()[:, None]
    info = (centered * (f_values * model.grid.weights)) @ centered.T
    return 0.5 * (info + info.T)
