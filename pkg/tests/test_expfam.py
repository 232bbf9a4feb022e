import numpy as np
import pytest

from expfam.basis import StatisticBasis, custom_basis, hermite_basis, polynomial_basis
from expfam.fit import FitOptions, fit_mle, prepare_samples, sample_log_likelihood
from expfam.model import (
    exp_family,
    fisher_mu,
    fisher_x,
    log_marginal,
    log_partition,
    marginal,
    posterior_mean_stat,
    score,
    tilt_density,
)
from numerics.grid import DensityVector, make_grid, quad
from numerics.kernels import cyclic_kernel, wrapped_gaussian
from numerics.static import DegenerateBasisError, InvalidArgumentError
from sim.generators import sample_hierarchical


@pytest.fixture(scope="module")
def wide():
    grid = make_grid(16.0, 1024)
    return grid, wrapped_gaussian(grid, 1.0), cyclic_kernel(grid)


def test_basis_shapes_and_labels(grid8):
    poly = polynomial_basis(grid8, 3)
    assert poly.p == 3
    assert poly.labels == ("mu^1", "mu^2", "mu^3")
    assert poly.columns[1] == pytest.approx(grid8.points ** 2)
    assert hermite_basis(grid8, 2).labels == ("H1", "H2")
    assert custom_basis(grid8, grid8.points).labels == ("T1",)


@pytest.mark.parametrize("p", [0, -1, 2.5])
def test_basis_rejects_bad_dimension(grid8, p):
    with pytest.raises(InvalidArgumentError):
        polynomial_basis(grid8, p)


def test_basis_rejects_wrong_width(grid8):
    with pytest.raises(InvalidArgumentError):
        StatisticBasis(grid=grid8, columns=np.ones((2, 7)))


def test_dependent_basis_is_detected(grid8, gauss8):
    basis = custom_basis(grid8, [grid8.points, 2.0 * grid8.points])
    assert not basis.is_independent(gauss8)
    assert polynomial_basis(grid8, 4).is_independent(gauss8)


def test_standardized_basis_is_centered_and_scaled(grid8, gauss8):
    basis, shift, scale = polynomial_basis(grid8, 2).standardized(gauss8)
    assert basis.mean(gauss8) == pytest.approx([0.0, 0.0], abs=1e-10)
    assert np.diag(basis.covariance(gauss8)) == pytest.approx([1.0, 1.0], abs=1e-10)
    assert shift == pytest.approx([0.0, 1.0], abs=1e-8)
    assert scale == pytest.approx([1.0, np.sqrt(2.0)], abs=1e-8)


def test_log_partition_at_zero(grid8, gauss8, hermite8):
    assert log_partition(gauss8, hermite8, np.zeros(3)) == pytest.approx(0.0, abs=1e-12)


def test_log_partition_gaussian_mgf(grid8, gauss8):
    assert log_partition(gauss8, polynomial_basis(grid8, 1), [0.5]) == pytest.approx(0.125, abs=1e-6)


def test_log_partition_quadratic_tilt(wide):
    grid, carrier, _ = wide
    expected = -0.5 * np.log(1.0 - 0.8)
    assert log_partition(carrier, polynomial_basis(grid, 2), [0.0, 0.4]) == pytest.approx(expected, abs=1e-4)


def test_log_partition_rejects_wrong_eta_length(gauss8, hermite8):
    with pytest.raises(InvalidArgumentError):
        log_partition(gauss8, hermite8, [0.1, 0.2])


def test_tilt_at_zero_returns_carrier(gauss8, hermite8):
    assert tilt_density(gauss8, hermite8, np.zeros(3)) is gauss8


def test_gaussian_conjugate_tilt():
    grid = make_grid(10.0, 640)
    carrier = wrapped_gaussian(grid, 1.0)
    tilted = tilt_density(carrier, polynomial_basis(grid, 1), [1.0])
    assert tilted.values == pytest.approx(wrapped_gaussian(grid, 1.0, center=1.0).values, abs=1e-6)


def test_tilt_is_normalized_for_random_eta(grid8, gauss8, hermite8, rng):
    for _ in range(5):
        tilted = tilt_density(gauss8, hermite8, rng.uniform(-1.0, 1.0, size=3))
        assert quad(grid8, tilted.values) == pytest.approx(1.0, abs=1e-8)


def test_marginal_of_gaussian_is_wider_gaussian(grid8, gauss8, kernel8):
    f_values = marginal(kernel8, gauss8).values
    assert f_values == pytest.approx(wrapped_gaussian(grid8, np.sqrt(2.0)).values, abs=1e-6)


def test_marginal_of_point_mass_is_kernel_column(grid8, kernel8):
    values = np.zeros(grid8.n_points)
    values[200] = 1.0 / grid8.spacing
    f_values = marginal(kernel8, DensityVector(grid=grid8, values=values)).values
    assert f_values == pytest.approx(kernel8.values[:, 200], abs=1e-12)


def test_posterior_mean_gaussian(grid8, gauss8, kernel8):
    model = exp_family(gauss8, polynomial_basis(grid8, 1), kernel8)
    assert posterior_mean_stat(model, 1.0)[0] == pytest.approx(0.5, abs=1e-4)
    assert posterior_mean_stat(model, 0.0)[0] == pytest.approx(0.0, abs=1e-10)
    assert score(model, 1.0)[0] == pytest.approx(0.5, abs=1e-4)


def test_posterior_mean_of_constant_statistic(grid8, gauss8, kernel8):
    model = exp_family(gauss8, custom_basis(grid8, np.full(grid8.n_points, 2.5)), kernel8)
    assert posterior_mean_stat(model, np.array([-3.0, 0.2, 4.0]))[:, 0] == pytest.approx([2.5, 2.5, 2.5], rel=1e-12)
    assert fisher_mu(model) == pytest.approx(np.zeros((1, 1)), abs=1e-12)
    assert fisher_x(model) == pytest.approx(np.zeros((1, 1)), abs=1e-12)


def test_point_evaluation_rejects_out_of_domain(grid8, gauss8, kernel8, hermite8):
    model = exp_family(gauss8, hermite8, kernel8)
    with pytest.raises(InvalidArgumentError):
        posterior_mean_stat(model, 9.0)


def test_score_matches_finite_difference(grid8, gauss8, kernel8, hermite8):
    eta = np.array([0.2, -0.1, 0.05])
    x = 0.8
    step = 1e-4
    model = exp_family(gauss8, hermite8, kernel8, eta)
    expected = []
    for k in range(3):
        shift = np.zeros(3)
        shift[k] = step
        upper = log_marginal(exp_family(gauss8, hermite8, kernel8, eta + shift), x)
        lower = log_marginal(exp_family(gauss8, hermite8, kernel8, eta - shift), x)
        expected.append((upper - lower) / (2.0 * step))
    assert score(model, x) == pytest.approx(expected, abs=1e-5)


def test_score_has_mean_zero_under_the_marginal(grid8, gauss8, kernel8, hermite8):
    model = exp_family(gauss8, hermite8, kernel8, [0.3, 0.0, 0.0])
    scores = score(model, grid8.points)
    weighted = quad(grid8, scores.T * model.f_eta.values)
    assert weighted == pytest.approx(np.zeros(3), abs=1e-8)


@pytest.mark.parametrize("eta", [[0.3, -0.2, 0.05], [-0.5, 0.1, 0.0]])
def test_information_identity_away_from_the_carrier(grid8, gauss8, kernel8, hermite8, eta):
    model = exp_family(gauss8, hermite8, kernel8, eta)
    scores = score(model, grid8.points).T
    covariance = quad(grid8, scores[:, None, :] * scores[None, :, :] * model.f_eta.values)
    assert fisher_x(model) == pytest.approx(covariance, abs=1e-6)
    assert np.all(np.linalg.eigvalsh(fisher_mu(model) - fisher_x(model)) >= -1e-10)


def test_fisher_informations_for_hermite_basis(gauss8, kernel8, hermite8):
    model = exp_family(gauss8, hermite8, kernel8)
    assert fisher_mu(model) == pytest.approx(np.eye(3), abs=1e-6)
    assert fisher_x(model) == pytest.approx(np.diag([0.5, 0.25, 0.125]), abs=1e-4)


def test_fisher_informations_for_the_mean(wide):
    grid, _, kernel = wide
    for sigma in (0.5, 1.0, 2.0):
        carrier = wrapped_gaussian(grid, sigma)
        model = exp_family(carrier, polynomial_basis(grid, 1), kernel)
        assert fisher_mu(model)[0, 0] == pytest.approx(sigma ** 2, abs=1e-6)
        assert fisher_x(model)[0, 0] == pytest.approx(sigma ** 4 / (1.0 + sigma ** 2), abs=1e-4)


def test_prepare_samples_policies(grid8):
    samples = np.array([0.0, 8.5, -9.0])
    with pytest.raises(InvalidArgumentError, match="indices 1, 2"):
        prepare_samples(samples, grid8)
    assert prepare_samples(samples, grid8, "clamp").tolist() == [0.0, 8.0, -8.0]
    assert prepare_samples(samples, grid8, "wrap") == pytest.approx([0.0, -7.5, 7.0])


def test_fit_recovers_gaussian_location(wide):
    grid, carrier, kernel = wide
    samples = np.random.default_rng(7).normal(0.7, np.sqrt(2.0), size=100_000)
    result = fit_mle(carrier, polynomial_basis(grid, 1), samples, kernel=kernel)
    assert result.converged
    assert result.eta[0] == pytest.approx(0.7, abs=0.02)
    assert result.eta[0] == pytest.approx(samples.mean(), abs=2e-3)
    assert result.g_hat.mass() == pytest.approx(1.0, abs=1e-8)
    zero = exp_family(carrier, polynomial_basis(grid, 1), kernel)
    assert result.log_likelihood >= sample_log_likelihood(zero, samples)


def test_fit_at_the_carrier_stays_near_zero(grid8, gauss8, kernel8):
    samples = sample_hierarchical(gauss8, 20_000, seed=11)
    result = fit_mle(gauss8, polynomial_basis(grid8, 4), samples, kernel=kernel8)
    errors = result.standard_errors()
    assert result.converged
    assert errors is not None and np.all(errors > 0)
    assert np.all(np.abs(result.eta) <= 4.0 * errors)


@pytest.mark.parametrize("information", ["expected", "observed"])
def test_fit_stops_once_the_likelihood_is_flat(grid8, gauss8, kernel8, information):
    samples = sample_hierarchical(gauss8, 20_000, seed=11)
    options = FitOptions(information=information)
    result = fit_mle(gauss8, polynomial_basis(grid8, 4), samples, options, kernel=kernel8)
    assert result.converged
    assert result.iterations < 30
    # score per sample at the reported optimum is far below the sampling noise
    assert result.gradient_norm / samples.size < 1e-5


def test_observed_and_expected_information_agree(grid8, gauss8, kernel8, hermite8):
    samples = sample_hierarchical(gauss8, 20_000, seed=3)
    expected = fit_mle(gauss8, hermite8, samples, kernel=kernel8)
    observed = fit_mle(gauss8, hermite8, samples, FitOptions(information="observed"), kernel=kernel8)
    assert observed.converged and expected.converged
    assert observed.eta == pytest.approx(expected.eta, abs=1e-6)
    per_sample = expected.observed_information / samples.size
    assert per_sample == pytest.approx(fisher_x(expected.model), abs=0.02)


def test_ridge_shrinks_the_estimate(wide):
    grid, carrier, kernel = wide
    samples = np.random.default_rng(5).normal(0.7, np.sqrt(2.0), size=20_000)
    ridge = samples.size / 4.0
    result = fit_mle(carrier, polynomial_basis(grid, 1), samples, FitOptions(ridge=ridge), kernel=kernel)
    assert result.eta[0] == pytest.approx(samples.mean() / 2.0, abs=5e-3)


def test_fit_is_reparametrization_invariant(grid8, gauss8, kernel8):
    samples = sample_hierarchical(wrapped_gaussian(grid8, 1.3), 5_000, seed=1)
    poly = fit_mle(gauss8, polynomial_basis(grid8, 3), samples, kernel=kernel8)
    herm = fit_mle(gauss8, hermite_basis(grid8, 3), samples, kernel=kernel8)
    assert poly.g_hat.values == pytest.approx(herm.g_hat.values, abs=1e-6)
    assert poly.log_likelihood == pytest.approx(herm.log_likelihood, abs=1e-4)


def test_fit_rejects_bad_input(grid8, gauss8, kernel8):
    with pytest.raises(InvalidArgumentError):
        fit_mle(gauss8, polynomial_basis(grid8, 3), [0.1, 0.2], kernel=kernel8)
    with pytest.raises(InvalidArgumentError):
        fit_mle(gauss8, polynomial_basis(grid8, 1), [0.1, 12.0], kernel=kernel8)
    with pytest.raises(DegenerateBasisError):
        fit_mle(gauss8, custom_basis(grid8, [grid8.points, 3.0 * grid8.points]), np.linspace(-1, 1, 50),
                kernel=kernel8)
