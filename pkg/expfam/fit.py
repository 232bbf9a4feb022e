""" Maximum-likelihood fit of an exponential-family prior from noisy samples """
import logging as log
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field

from expfam.basis import StatisticBasis
from expfam.model import ExpFamModel, exp_family, fisher_x
from numerics.grid import DensityVector
from numerics.kernels import KernelMatrix, cyclic_kernel
from numerics.static import (
    ARMIJO_FRACTION,
    DEFAULT_GRADIENT_RTOL,
    DEFAULT_MAX_ITERATIONS,
    MARGINAL_FLOOR,
    MAX_STEP_HALVINGS,
    NEWTON_DECREMENT_RTOL,
    OBJECTIVE_NOISE_RTOL,
    DegenerateBasisError,
    DegenerateMarginalError,
    InvalidArgumentError,
    NumericOverflowError,
    check_finite,
    require_same_grid,
)


class FitOptions(BaseModel):
    """Tuning knobs of the damped Newton fitter."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    max_iterations: int = Field(default=DEFAULT_MAX_ITERATIONS, ge=1)
    gradient_rtol: float = Field(default=DEFAULT_GRADIENT_RTOL, gt=0)
    ridge: float = Field(default=0.0, ge=0)
    out_of_domain: Literal["reject", "clamp", "wrap"] = "reject"
    information: Literal["expected", "observed"] = "expected"
    max_step_halvings: int = Field(default=MAX_STEP_HALVINGS, ge=1)


@dataclass(frozen=True, eq=False)
class FitResult:
    model: ExpFamModel
    log_likelihood: float
    iterations: int
    converged: bool
    observed_information: np.ndarray = field(repr=False)
    gradient_norm: float
    n_samples: int = 0

    @property
    def eta(self) -> np.ndarray:
        return self.model.eta

    @property
    def g_hat(self) -> DensityVector:
        return self.model.g_eta

    def standard_errors(self) -> Optional[np.ndarray]:
        """ sqrt of the diagonal of the inverse observed information, None when singular """
        try:
            inverse = np.linalg.inv(self.observed_information)
        except np.linalg.LinAlgError:
            return None
        diagonal = np.diag(inverse)
        if np.any(diagonal < 0):
            return None
        return np.sqrt(diagonal)


def prepare_samples(samples, grid, policy: str = "reject") -> np.ndarray:
    """ Validates observations against the domain [-M, M]

    :param samples: 1-D array of observations
    :param Grid grid:
    :param str policy: reject, clamp or wrap
    :return: samples inside the domain
    """
    samples = check_finite(np.ravel(samples), "samples")
    outside = np.flatnonzero(~grid.contains(samples))
    if outside.size == 0:
        return samples
    if policy == "reject":
        shown = ", ".join(str(i) for i in outside[:10])
        more = f" and {outside.size - 10} more" if outside.size > 10 else ""
        raise InvalidArgumentError(
            f"{outside.size} samples outside [-{grid.m_half}, {grid.m_half}] at indices {shown}{more}")
    log.warning(f"{outside.size} samples outside the domain, applying policy '{policy}'")
    if policy == "clamp":
        return np.clip(samples, -grid.m_half, grid.m_half)
    if policy == "wrap":
        return grid.wrap(samples)
    raise InvalidArgumentError(f"unknown out-of-domain policy '{policy}'")


def _sample_terms(model: ExpFamModel, samples: np.ndarray):
    """ Interpolated marginal at the samples and the per-sample posterior means of T

    The likelihood uses f_eta linearly interpolated between grid points; the score
    below is the exact gradient of that interpolated likelihood.
    """
    grid = model.grid
    f_samples = grid.interpolate(model.f_eta.values, samples)
    if np.any(f_samples < MARGINAL_FLOOR):
        return f_samples, None
    numer = grid.interpolate(model.numerators(), samples)
    return f_samples, (numer / f_samples).T


def sample_log_likelihood(model: ExpFamModel, samples) -> float:
    """ sum_i log f_eta(X_i) with the grid marginal interpolated at X_i """
    f_samples = model.grid.interpolate(model.f_eta.values, np.asarray(samples, dtype=float))
    if np.any(f_samples < MARGINAL_FLOOR):
        return -np.inf
    return float(np.sum(np.log(f_samples)))


def observed_information(model: ExpFamModel, samples) -> np.ndarray:
    """ Negative Hessian of the interpolated sample log-likelihood

    Per sample: Cov_g(T) - (E[T T^T | X_i] - E[T | X_i] E[T | X_i]^T).
    """
    samples = np.asarray(samples, dtype=float)
    grid = model.grid
    columns = model.basis.columns
    f_samples, post_means = _sample_terms(model, samples)
    if post_means is None:
        raise DegenerateMarginalError("marginal underflows at one or more samples")
    p = model.p
    products = (columns[:, None, :] * columns[None, :, :]).reshape(p * p, -1)
    second = grid.interpolate(model.kernel.apply(products * model.g_eta.values), samples) / f_samples
    second = second.T.reshape(-1, p, p)
    posterior_cov = second - post_means[:, :, None] * post_means[:, None, :]
    cov = model.basis.covariance(model.g_eta)
    info = samples.size * cov - posterior_cov.sum(axis=0)
    return 0.5 * (info + info.T)


def _objective(model: ExpFamModel, eta_original: np.ndarray, samples: np.ndarray, ridge: float) -> float:
    return sample_log_likelihood(model, samples) - ridge * float(eta_original @ eta_original)


def _gradient(model: ExpFamModel, samples: np.ndarray, eta_std: np.ndarray, scale: np.ndarray,
              ridge: float) -> np.ndarray:
    """ Penalized score in standardized coordinates """
    _, post_means = _sample_terms(model, samples)
    return post_means.sum(axis=0) - samples.size * model.stat_mean() - 2.0 * ridge * eta_std / scale ** 2


def _decrement_tolerance(objective: float) -> float:
    return NEWTON_DECREMENT_RTOL * max(abs(objective), 1.0)


def _build(carrier, basis, kernel, eta):
    try:
        return exp_family(carrier, basis, kernel, eta)
    except NumericOverflowError as exc:
        log.debug(f"model rejected at eta={eta}: {exc}")
        return None


def fit_mle(carrier: DensityVector, basis: StatisticBasis, samples, options: Optional[FitOptions] = None,
            kernel: Optional[KernelMatrix] = None) -> FitResult:
    """ Fits g_eta = g0 exp(eta.T - psi) to X_i = mu_i + N(0, 1) by maximum likelihood

    Damped Newton ascent on the exact score with the expected (or observed) Fisher
    information, halving the step until it passes an Armijo test on the penalized
    log-likelihood. Changes within rounding noise of the objective count as flat.
    Stops on a small score, a small Newton decrement or a step that no longer
    moves eta.

    Iterations run on a carrier-standardized copy of the basis; eta is reported in
    the coordinates of the given basis.

    :param DensityVector carrier: g0
    :param StatisticBasis basis: T
    :param samples: observations X_1..X_n
    :param FitOptions options:
    :param KernelMatrix kernel: cyclic noise kernel, built on the carrier grid when omitted
    :return: FitResult
    """
    options = options or FitOptions()
    grid = carrier.grid
    require_same_grid(grid, basis.grid, "carrier and basis")
    kernel = kernel or cyclic_kernel(grid)
    require_same_grid(grid, kernel.grid, "carrier and kernel")
    samples = prepare_samples(samples, grid, options.out_of_domain)
    n = samples.size
    if n < max(basis.p, 1):
        raise InvalidArgumentError(f"need at least p={basis.p} samples, got {n}")
    if not basis.is_independent(carrier):
        raise DegenerateBasisError("basis columns are linearly dependent under the carrier")

    std_basis, _, scale = basis.standardized(carrier)
    tolerance = options.gradient_rtol * n
    ridge = options.ridge

    eta_std = np.zeros(basis.p)
    model = exp_family(carrier, std_basis, kernel, eta_std)
    objective = _objective(model, eta_std / scale, samples, ridge)
    if not np.isfinite(objective):
        raise DegenerateMarginalError("initial marginal underflows at one or more samples")

    converged = False
    iterations = 0
    gradient_norm = np.inf
    decrement = np.inf
    for iterations in range(1, options.max_iterations + 1):
        gradient_std = _gradient(model, samples, eta_std, scale, ridge)
        gradient_norm = float(np.linalg.norm(gradient_std * scale))
        log.debug(f"iteration {iterations}: loglik={objective:.10g} |grad|={gradient_norm:.3e}")
        if gradient_norm <= tolerance:
            converged = True
            break

        if options.information == "observed":
            hessian = observed_information(model, samples)
        else:
            hessian = n * fisher_x(model)
        hessian = hessian + 2.0 * ridge * np.diag(1.0 / scale ** 2)
        try:
            direction = scipy.linalg.cho_solve(scipy.linalg.cho_factor(hessian), gradient_std)
        except (np.linalg.LinAlgError, ValueError):
            direction = None
        if direction is None or direction @ gradient_std <= 0:
            log.debug("information not positive definite, taking a gradient step")
            direction = gradient_std / n
            decrement = np.inf
        else:
            # half the squared Newton decrement: the ascent the quadratic model still promises
            decrement = 0.5 * float(direction @ gradient_std)
            if decrement <= _decrement_tolerance(objective):
                converged = True
                break

        slope = float(direction @ gradient_std)
        noise = OBJECTIVE_NOISE_RTOL * max(abs(objective), 1.0)
        step = 1.0
        accepted = False
        for _ in range(options.max_step_halvings):
            candidate_eta = eta_std + step * direction
            candidate = _build(carrier, std_basis, kernel, candidate_eta)
            if candidate is not None:
                candidate_objective = _objective(candidate, candidate_eta / scale, samples, ridge)
                gain = candidate_objective - objective
                if gain >= ARMIJO_FRACTION * step * slope or abs(gain) <= noise:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            log.debug(f"no ascent along the step at iteration {iterations}")
            break
        if np.array_equal(candidate_eta, eta_std):
            log.debug(f"step below the resolution of eta at iteration {iterations}")
            break
        eta_std, model, objective = candidate_eta, candidate, candidate_objective

    if not converged:
        # a stalled line search at a point that meets either tolerance still counts
        gradient_norm = float(np.linalg.norm(_gradient(model, samples, eta_std, scale, ridge) * scale))
        converged = gradient_norm <= tolerance or decrement <= _decrement_tolerance(objective)
    if converged:
        log.info(f"fit converged after {iterations} iterations, loglik={objective:.10g}")
    else:
        log.warning(f"fit did not converge after {iterations} iterations, |grad|={gradient_norm:.3e}")

    final = exp_family(carrier, basis, kernel, eta_std / scale)
    info = observed_information(final, samples) + 2.0 * ridge * np.eye(basis.p)
    return FitResult(model=final, log_likelihood=sample_log_likelihood(final, samples), iterations=iterations,
                     converged=converged, observed_information=info, gradient_norm=gradient_norm, n_samples=n)
