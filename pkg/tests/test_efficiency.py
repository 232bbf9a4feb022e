import numpy as np
import pytest

from efficiency.relative import information_pair, rho_multivariate, rho_univariate
from efficiency.spectral import (
    approx_tilt,
    favorable_basis,
    floor_carrier,
    most_favorable,
    operator_pg,
    perturbed_marginal_kl,
    spectrum,
)
from expfam.basis import custom_basis, hermite_basis
from numerics.grid import default_m_half, make_grid, quad
from numerics.hermite import hermite, hermite_matrix
from numerics.kernels import cyclic_kernel, wrapped_gaussian
from numerics.static import DegenerateBasisError, DegenerateCarrierError, DegenerateStatisticError, \
    InvalidArgumentError
from sim.carriers import TwoTowersCarrier, carrier_library


@pytest.fixture(scope="module")
def gaussian_spectrum(fine_gauss, fine_kernel):
    return most_favorable(fine_gauss, fine_kernel, 4)


def _g0_norm(grid, carrier, values):
    return np.sqrt(quad(grid, values ** 2 * carrier.values))


@pytest.mark.parametrize("order, expected", [(1, 0.5), (2, 0.25), (3, 0.125)])
def test_rho_univariate_hermite(grid8, gauss8, kernel8, order, expected):
    assert rho_univariate(gauss8, kernel8, hermite(order, grid8.points)) == pytest.approx(expected, abs=1e-4)


def test_rho_univariate_rejects_constant(grid8, gauss8, kernel8):
    with pytest.raises(DegenerateStatisticError):
        rho_univariate(gauss8, kernel8, np.ones(grid8.n_points))


def test_rho_multivariate_hermite(gauss8, kernel8, hermite8):
    report = rho_multivariate(gauss8, kernel8, hermite8)
    assert report.rho == pytest.approx(0.125, abs=1e-4)
    assert report.worst_direction == pytest.approx([0.0, 0.0, 1.0], abs=1e-3)
    assert report.generalized_eigenvalues == pytest.approx([0.5, 0.25, 0.125], abs=1e-4)
    assert set(report.to_dict()) == {"rho", "worst_direction", "i_mu", "i_x", "generalized_eigenvalues"}


def test_rho_multivariate_reduces_to_univariate(grid8, gauss8, kernel8):
    t = grid8.points ** 3 - grid8.points
    single = rho_multivariate(gauss8, kernel8, custom_basis(grid8, t)).rho
    assert single == pytest.approx(rho_univariate(gauss8, kernel8, t), abs=1e-12)


def test_rho_of_random_bases_stays_below_the_next_eigenvalue(grid8, gauss8, kernel8, rng):
    smooth = np.vstack([hermite_matrix(5, grid8.points)[1:], np.tanh(grid8.points), np.sin(grid8.points)])
    for _ in range(10):
        basis = custom_basis(grid8, rng.standard_normal((3, smooth.shape[0])) @ smooth)
        assert rho_multivariate(gauss8, kernel8, basis).rho <= 0.125 + 1e-4


@pytest.mark.slow
def test_rho_univariate_matches_monte_carlo(grid8, gauss8, kernel8, rng):
    # mu1, mu2 drawn independently from the posterior given the same X, so
    # Cov(t(mu1), t(mu2)) = Var(E[t | X])
    n_batches, batch = 100, 10_000
    for _ in range(10):
        omega, phase, weight = rng.uniform(0.3, 2.0), rng.uniform(0.0, np.pi), rng.uniform(-1.0, 1.0)

        def statistic(mu):
            return np.sin(omega * mu + phase) + weight * np.tanh(mu)

        x = rng.normal(0.0, np.sqrt(2.0), size=(n_batches, batch))
        first = statistic(rng.normal(x / 2.0, np.sqrt(0.5)))
        second = statistic(rng.normal(x / 2.0, np.sqrt(0.5)))
        ratios = [np.cov(a, b)[0, 1] / np.var(np.concatenate([a, b]), ddof=1) for a, b in zip(first, second)]
        estimate = np.mean(ratios)
        standard_error = np.std(ratios, ddof=1) / np.sqrt(n_batches)
        expected = rho_univariate(gauss8, kernel8, statistic(grid8.points))
        assert abs(expected - estimate) <= 3.0 * standard_error


def test_rho_is_transformation_invariant(gauss8, kernel8, hermite8, rng):
    base = rho_multivariate(gauss8, kernel8, hermite8).rho
    for _ in range(20):
        q_matrix = rng.standard_normal((3, 3)) + 3.0 * np.eye(3)
        assert rho_multivariate(gauss8, kernel8, hermite8.transformed(q_matrix)).rho == pytest.approx(base, abs=1e-8)


def test_rho_multivariate_rejects_dependent_statistics(grid8, gauss8, kernel8):
    with pytest.raises(DegenerateBasisError):
        rho_multivariate(gauss8, kernel8, custom_basis(grid8, [grid8.points, -2.0 * grid8.points]))


def test_information_pair_is_ordered(gauss8, kernel8, hermite8):
    i_mu, i_x = information_pair(gauss8, kernel8, hermite8)
    assert np.all(np.linalg.eigvalsh(i_mu - i_x) >= -1e-10)


def test_operator_pg_leading_pair(fine_grid, fine_gauss, fine_kernel):
    matrix = operator_pg(fine_gauss, fine_kernel)
    assert np.array_equal(matrix, matrix.T)
    eigenvalues, vectors = np.linalg.eigh(matrix)
    assert eigenvalues[-1] == pytest.approx(1.0, abs=1e-4)
    expected = np.sqrt(fine_grid.weights * fine_gauss.values)
    assert abs(vectors[:, -1] @ expected) / np.linalg.norm(expected) == pytest.approx(1.0, abs=1e-6)
    assert eigenvalues.min() >= -1e-8
    assert eigenvalues.max() <= 1.0 + 1e-4


def test_gaussian_spectrum_is_geometric(gaussian_spectrum):
    assert gaussian_spectrum.eigenvalues[:7] == pytest.approx(0.5 ** np.arange(7), abs=1e-3)
    assert gaussian_spectrum.rho_per_dim == pytest.approx([0.5, 0.25, 0.125, 0.0625], abs=1e-3)
    assert np.all(np.diff(gaussian_spectrum.rho_per_dim) <= 0)
    assert gaussian_spectrum.cross_check_rho == pytest.approx(gaussian_spectrum.eigenvalues[4], abs=1e-4)
    assert not gaussian_spectrum.degenerate_spectrum


@pytest.mark.parametrize("sigma", [0.5, 2.0])
def test_gaussian_spectrum_other_scales(sigma):
    grid = make_grid(default_m_half(sigma), 1024)
    _, eigenvalues, _ = spectrum(wrapped_gaussian(grid, sigma), cyclic_kernel(grid))
    ratio = sigma ** 2 / (1.0 + sigma ** 2)
    assert eigenvalues[:7] == pytest.approx(ratio ** np.arange(7), abs=1e-3)


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_default_domain_keeps_tail_residuals_small(sigma):
    grid = make_grid(default_m_half(sigma), 1024)
    carrier = wrapped_gaussian(grid, sigma)
    result = most_favorable(carrier, cyclic_kernel(grid), 4, cross_check=False)
    stats = result.statistics()
    weight = carrier.values * grid.weights
    for h_values in hermite_matrix(4, grid.points / sigma)[1:]:
        residual = h_values - ((stats * weight) @ h_values) @ stats
        assert _g0_norm(grid, carrier, residual) <= 1e-3


def test_favorable_statistics_span_hermite_polynomials(fine_grid, fine_gauss, gaussian_spectrum):
    stats = gaussian_spectrum.statistics()
    weight = fine_gauss.values * fine_grid.weights
    gram = (stats * weight) @ stats.T
    assert gram == pytest.approx(np.eye(4), abs=1e-6)
    for j, h_values in enumerate(hermite_matrix(4, fine_grid.points)[1:], start=1):
        coefficients = (stats * weight) @ h_values
        residual = h_values - coefficients @ stats
        assert _g0_norm(fine_grid, fine_gauss, residual) <= 1e-3
        assert abs(coefficients[j - 1]) == pytest.approx(1.0, abs=1e-3)


def test_statistics_beyond_the_computed_family(gaussian_spectrum):
    assert gaussian_spectrum.statistics(6).shape == (6, 1024)
    with pytest.raises(InvalidArgumentError):
        gaussian_spectrum.statistics(0)


def test_most_favorable_rejects_bad_p(gauss8, kernel8):
    with pytest.raises(InvalidArgumentError):
        most_favorable(gauss8, kernel8, 0)
    with pytest.raises(InvalidArgumentError):
        most_favorable(gauss8, kernel8, 511)


def test_carrier_with_zeros_needs_a_floor(grid8, kernel8):
    towers = carrier_library(TwoTowersCarrier(variant=1), grid8)
    with pytest.raises(DegenerateCarrierError):
        operator_pg(towers, kernel8)
    floored, floor = floor_carrier(towers, 1e-10)
    assert floor == pytest.approx(1e-10 * towers.values.max())
    assert floored.values.min() > 0
    assert floored.mass() == pytest.approx(1.0, abs=1e-12)


def test_two_towers_leading_statistic_tracks_the_mean(grid8, kernel8):
    towers = carrier_library(TwoTowersCarrier(variant=1), grid8)
    result = most_favorable(towers, kernel8, 2, floor=1e-10)
    lead = result.statistics(1)[0]
    carrier = result.carrier
    cosine = abs(quad(grid8, lead * grid8.points * carrier.values)) / (
        _g0_norm(grid8, carrier, lead) * _g0_norm(grid8, carrier, grid8.points))
    assert cosine >= 0.95
    assert result.carrier_floor == 1e-10


def test_separated_towers_keep_more_information(grid8, kernel8):
    near = most_favorable(carrier_library(TwoTowersCarrier(variant=1), grid8), kernel8, 2, floor=1e-10)
    far = most_favorable(carrier_library(TwoTowersCarrier(variant=2), grid8), kernel8, 2, floor=1e-10)
    assert far.rho_per_dim[0] > near.rho_per_dim[1] + 0.2


def test_favorable_basis_is_a_statistic_basis(gauss8, kernel8):
    carrier, basis = favorable_basis(gauss8, kernel8, 3)
    assert carrier is gauss8
    assert basis.labels == ("T1", "T2", "T3")
    assert rho_multivariate(carrier, kernel8, basis).rho == pytest.approx(0.125, abs=1e-3)


def test_approx_tilt_of_orthogonal_hermite(fine_grid, gaussian_spectrum):
    tau = hermite(5, fine_grid.points)
    coefficients, bound = approx_tilt(gaussian_spectrum, tau, 2)
    assert coefficients == pytest.approx([0.0, 0.0], abs=1e-6)
    assert bound == pytest.approx(0.0625, abs=1e-3)
    bounds = [approx_tilt(gaussian_spectrum, tau, p)[1] for p in range(0, 5)]
    assert np.all(np.diff(bounds) < 0)


def test_approx_tilt_of_a_favorable_statistic(gaussian_spectrum):
    tau = gaussian_spectrum.statistics(1)[0]
    coefficients, _ = approx_tilt(gaussian_spectrum, tau, 3)
    assert coefficients == pytest.approx([1.0, 0.0, 0.0], abs=1e-8)


def test_approx_tilt_rejects_wrong_shape(gaussian_spectrum):
    with pytest.raises(InvalidArgumentError):
        approx_tilt(gaussian_spectrum, np.ones(5), 2)


def test_perturbed_marginal_kl_respects_the_bound(fine_grid, fine_gauss, fine_kernel, gaussian_spectrum):
    tau = hermite(5, fine_grid.points)
    coefficients, bound = approx_tilt(gaussian_spectrum, tau, 2)
    approximation = coefficients @ gaussian_spectrum.statistics(2)
    scaled_kl = perturbed_marginal_kl(fine_gauss, fine_kernel, tau, approximation, 1e6)
    assert 0.0 <= scaled_kl <= bound
    assert scaled_kl == pytest.approx(0.5 * 0.5 ** 5, rel=0.05)


def test_perturbed_marginal_kl_vanishes_for_identical_tilts(fine_grid, fine_gauss, fine_kernel):
    tau = hermite(2, fine_grid.points)
    assert perturbed_marginal_kl(fine_gauss, fine_kernel, tau, tau, 100.0) == pytest.approx(0.0, abs=1e-12)


def test_hermite_basis_matches_favorable_rho(gauss8, kernel8):
    report = rho_multivariate(gauss8, kernel8, hermite_basis(gauss8.grid, 4))
    assert report.rho == pytest.approx(0.0625, abs=1e-4)
