""" Subcommands of the decon CLI, one pydantic model per subcommand """
import logging as log
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field

from efficiency.relative import rho_multivariate
from efficiency.spectral import favorable_basis, most_favorable, spectrum
from expfam.basis import hermite_basis, polynomial_basis
from expfam.fit import FitOptions, fit_mle, prepare_samples
from expfam.model import fisher_mu, fisher_x, log_marginal
from cli.outputs import prepare_out_dir, write_density, write_manifest, write_report, write_table
from minimax.constants import EllipsoidSpec, minimax_report
from minimax.sequence import simulate_truncation_risk, truncation_risk, worst_case_gamma
from numerics.grid import default_m_half, make_grid
from numerics.hermite import hermite_matrix
from numerics.kernels import cyclic_kernel
from numerics.static import (
    DEFAULT_N_POINTS,
    DEFAULT_WRAP_TERMS,
    DegenerateCarrierError,
    NonConvergenceError,
)
from sim.carriers import (
    BumpCarrier,
    CustomCarrier,
    GaussianCarrier,
    GaussSpikeCarrier,
    GeneMixtureCarrier,
    TwoTowersCarrier,
    UniformCarrier,
    carrier_library,
)
from sim.crime import crime_pipeline, fetch_crime_data, load_community_records
from sim.runner import EfronEstimator, KernelEstimator, config_path, parse_sim_config, run_replicates
from utils import read_numeric_column, write_csv

CarrierKind = Literal["gaussian", "two_towers", "gauss_spike", "gene_mixture", "bump", "uniform", "custom"]
BasisKind = Literal["poly", "hermite", "favorable"]


class GridFlags(BaseModel):
    m_half: Optional[float] = Field(default=None, gt=0,
                                    description="half width M of the domain [-M, M], default 12 max(sigma, 1)")
    n_points: int = Field(default=DEFAULT_N_POINTS, ge=4, description="number of grid points")
    terms: int = Field(default=DEFAULT_WRAP_TERMS, ge=1, description="wrap terms of the Gaussian series")


class CarrierFlags(GridFlags):
    carrier: CarrierKind = Field(default="gaussian", description="carrier density g0")
    carrier_sigma: float = Field(default=1.0, gt=0, description="sd of the gaussian carrier")
    carrier_center: float = Field(default=0.0, description="center of the gaussian carrier")
    towers_variant: Literal[1, 2] = Field(default=1, description="two_towers support, 1: [1,2], 2: [3,6]")
    spike_location: float = Field(default=0.0, description="point mass location of gauss_spike")
    carrier_half_width: Optional[float] = Field(default=None, gt=0, description="support of the uniform carrier")
    carrier_file: Optional[str] = Field(default=None, description="CSV with a column g for the custom carrier")
    floor: Optional[float] = Field(default=None, gt=0, description="relative carrier floor, e.g. 1e-10")

    def carrier_spec(self):
        if self.carrier == "gaussian":
            return GaussianCarrier(sigma=self.carrier_sigma, center=self.carrier_center)
        if self.carrier == "two_towers":
            return TwoTowersCarrier(variant=self.towers_variant)
        if self.carrier == "gauss_spike":
            return GaussSpikeCarrier(location=self.spike_location)
        if self.carrier == "gene_mixture":
            return GeneMixtureCarrier()
        if self.carrier == "bump":
            return BumpCarrier()
        if self.carrier == "uniform":
            return UniformCarrier(half_width=self.carrier_half_width)
        if self.carrier_file is None:
            raise ValueError("--carrier custom needs --carrier-file")
        return CustomCarrier(values=read_numeric_column(self.carrier_file, "g").tolist())

    def domain(self) -> float:
        return self.m_half or default_m_half(self.carrier_sigma if self.carrier == "gaussian" else 1.0)

    def build(self, m_half: Optional[float] = None):
        """ (grid, kernel, carrier) from the flags, optionally on a wider domain """
        grid = make_grid(m_half or self.domain(), self.n_points)
        return grid, cyclic_kernel(grid, self.terms), carrier_library(self.carrier_spec(), grid, self.terms)


class BasisFlags(CarrierFlags):
    basis: BasisKind = Field(default="poly", description="statistic family: poly, hermite or favorable")
    p: int = Field(default=4, ge=1, description="dimension of the family")
    basis_scale: float = Field(default=1.0, gt=0, description="mu scale of the poly and hermite columns")

    def statistics(self, carrier, kernel):
        """ (carrier actually used, StatisticBasis) """
        if self.basis == "favorable":
            return favorable_basis(carrier, kernel, self.p, floor=self.floor)
        if self.basis == "hermite":
            return carrier, hermite_basis(carrier.grid, self.p, self.basis_scale)
        return carrier, polynomial_basis(carrier.grid, self.p, self.basis_scale)


class OutFlags(BaseModel):
    out_dir: str = Field(default=".", description="directory for output files and manifest.json")


def _degenerate_hint(exc: DegenerateCarrierError) -> DegenerateCarrierError:
    return DegenerateCarrierError(f"{exc}; rerun with --floor 1e-10 to floor the carrier")


class Fit(BasisFlags, OutFlags):
    """Fit an exponential-family prior to noisy samples by maximum likelihood."""
    samples: str = Field(description="CSV with one numeric column x")
    ridge: float = Field(default=0.0, ge=0, description="penalty on |eta|^2")
    max_iterations: int = Field(default=200, ge=1)
    information: Literal["expected", "observed"] = "expected"
    out_of_domain: Literal["reject", "clamp", "wrap"] = "reject"
    expand_domain: bool = Field(default=False, description="widen M to cover every sample")

    def cli_cmd(self):
        samples = read_numeric_column(self.samples, "x")
        m_half = self.domain()
        if self.expand_domain and samples.size:
            m_half = max(m_half, float(np.max(np.abs(samples))) * (1.0 + 1e-9))
            if m_half > self.domain():
                log.info(f"domain widened to M={m_half:.6g} to cover the samples")
        _, kernel, carrier = self.build(m_half)
        try:
            carrier, basis = self.statistics(carrier, kernel)
        except DegenerateCarrierError as exc:
            raise _degenerate_hint(exc) from exc
        options = FitOptions(max_iterations=self.max_iterations, ridge=self.ridge, information=self.information,
                             out_of_domain=self.out_of_domain)
        result = fit_mle(carrier, basis, samples, options, kernel=kernel)
        used = prepare_samples(samples, carrier.grid, self.out_of_domain)

        i_x = fisher_x(result.model)
        try:
            expected_se = np.sqrt(np.diag(np.linalg.inv(result.n_samples * i_x))).tolist()
        except np.linalg.LinAlgError:
            expected_se = None
        observed_se = result.standard_errors()
        report = {
            "basis": self.basis,
            "labels": list(basis.labels),
            "eta": result.eta.tolist(),
            "psi": result.model.psi,
            "log_likelihood": result.log_likelihood,
            "log_marginal_at_mean": log_marginal(result.model, float(np.mean(used))),
            "n_samples": result.n_samples,
            "m_half": m_half,
            "i_x": i_x.tolist(),
            "i_mu": fisher_mu(result.model).tolist(),
            "standard_errors_expected": expected_se,
            "standard_errors_observed": None if observed_se is None else observed_se.tolist(),
            "converged": result.converged,
            "iterations": result.iterations,
            "gradient_norm": result.gradient_norm,
            "mass": result.g_hat.mass(),
        }
        out = prepare_out_dir(self.out_dir)
        write_density(out / "fitted_density.csv", result.g_hat)
        write_report(out / "fit_report.json", report)
        write_manifest(out, "fit", self.model_dump(), ["fitted_density.csv", "fit_report.json"],
                       inputs={"samples": self.samples, "carrier_file": self.carrier_file})
        if not result.converged:
            raise NonConvergenceError(
                f"fit stopped after {result.iterations} iterations with |grad|={result.gradient_norm:.3e}; "
                f"partial report in {out / 'fit_report.json'}")


class Efficiency(BasisFlags, OutFlags):
    """Relative efficiency, most favorable statistics and the P_g spectrum."""
    mode: Literal["rho", "favorable", "spectrum"] = "favorable"
    n_eigen: Optional[int] = Field(default=None, ge=1, description="eigenvalues to write, p + 1 by default")

    def cli_cmd(self):
        _, kernel, carrier = self.build()
        out = prepare_out_dir(self.out_dir)
        outputs = []
        try:
            if self.mode == "rho":
                used, basis = self.statistics(carrier, kernel)
                report = {"mode": "rho", "labels": list(basis.labels),
                          **rho_multivariate(used, kernel, basis).to_dict()}
            elif self.mode == "spectrum":
                _, eigenvalues, _ = spectrum(carrier, kernel, self.floor)
                outputs.append(self._write_spectrum(out, eigenvalues))
                report = {"mode": "spectrum", "eigenvalues": eigenvalues[:self._n_eigen()].tolist()}
            else:
                result = most_favorable(carrier, kernel, self.p, floor=self.floor)
                outputs.append(self._write_spectrum(out, result.eigenvalues))
                header = ["mu"] + [f"T{j}" for j in range(1, self.p + 1)]
                write_table(out / "favorable.csv", header, [result.grid.points] + list(result.favorable_stats))
                outputs.append("favorable.csv")
                report = {
                    "mode": "favorable",
                    "rho": float(result.eigenvalues[self.p]),
                    "rho_per_dim": result.rho_per_dim.tolist(),
                    "cross_check_rho": result.cross_check_rho,
                    "degenerate_spectrum": result.degenerate_spectrum,
                    "carrier_floor": result.carrier_floor,
                }
        except DegenerateCarrierError as exc:
            raise _degenerate_hint(exc) from exc
        report.update({"carrier": self.carrier, "p": self.p})
        write_report(out / "rho_report.json", report)
        outputs.append("rho_report.json")
        write_manifest(out, "efficiency", self.model_dump(), outputs, inputs={"carrier_file": self.carrier_file})

    def _n_eigen(self) -> int:
        return self.n_eigen or self.p + 1

    def _write_spectrum(self, out, eigenvalues) -> str:
        count = min(self._n_eigen(), eigenvalues.size)
        write_table(out / "spectrum.csv", ["j", "lambda"], [np.arange(1, count + 1), eigenvalues[:count]])
        return "spectrum.csv"


class Minimax(OutFlags):
    """Pinsker minimax constants and rate bounds for a Hermite ellipsoid."""
    sigma: float = Field(default=1.0, gt=0)
    kappa: float = Field(default=2.0, gt=1, description="ellipsoid decay, must exceed 1")
    c: float = Field(default=100.0, gt=0, description="ellipsoid radius C")
    replicates: int = Field(default=0, ge=0, description="Monte-Carlo check of the truncation risk, 0 skips it")
    seed: int = Field(default=0, ge=0)

    def cli_cmd(self):
        spec = EllipsoidSpec(sigma=self.sigma, kappa=self.kappa, c=self.c)
        report = minimax_report(spec).to_dict()
        report["truncation_risk"] = truncation_risk(spec, report["p_star"])
        if self.replicates:
            gamma = worst_case_gamma(spec, report["p_star"], report["p_star"] + 4)
            estimate = simulate_truncation_risk(spec, report["p_star"], gamma, self.replicates, self.seed)
            report["simulated_truncation_risk"] = {"mean": estimate.mean, "standard_error": estimate.standard_error,
                                                   "replicates": estimate.replicates}
        out = prepare_out_dir(self.out_dir)
        write_report(out / "minimax_report.json", report)
        write_manifest(out, "minimax", self.model_dump(), ["minimax_report.json"], seed=self.seed)


class Simulate(OutFlags):
    """Replicated experiment from a JSON config file or a preset name."""
    config: str = Field(description="path of a config file or a preset: gene_efron, bump_kernel, ...")
    replicates: Optional[int] = Field(default=None, ge=1, description="override the configured replicates")
    seed: Optional[int] = Field(default=None, ge=0, description="override the configured seed")
    workers: int = Field(default=1, ge=1)

    def cli_cmd(self):
        config = parse_sim_config(self.config)
        overrides = {key: value for key, value in (("replicates", self.replicates), ("seed", self.seed))
                     if value is not None}
        if overrides:
            config = config.model_validate({**config.model_dump(), **overrides})
        result = run_replicates(config, workers=self.workers)

        out = prepare_out_dir(self.out_dir)
        rows = result.rows()
        header = list(rows[0].keys())
        write_table(out / "replicates.csv", header, [[row[name] for row in rows] for name in header])
        write_report(out / "summary.json", result.summary())
        parameters = {**self.model_dump(), "resolved_config": config.model_dump(mode="json")}
        write_manifest(out, "simulate", parameters, ["replicates.csv", "summary.json"],
                       inputs={"config": str(config_path(self.config))}, seed=config.seed)


class Crime(OutFlags):
    """P(community is safe | down-sampled crime rate) from the communities-and-crime data."""
    data: Optional[str] = Field(default=None, description="tidy or raw crime file")
    fetch: bool = Field(default=False, description="download the raw file into the cache when missing")
    cache_dir: Optional[str] = Field(default=None, description="cache folder, $DECON_CACHE_DIR by default")
    b: int = Field(default=500, ge=1, description="residents interviewed per community")
    seed: int = Field(default=0, ge=0)
    estimator: Literal["efron", "kernel"] = "efron"
    p: int = Field(default=4, ge=1, description="degree of the efron family")
    noise: Literal["delta", "unit"] = Field(default="delta", description="sd of sqrt(p_hat): delta 1/(2 sqrt(B))")
    n_points: int = Field(default=DEFAULT_N_POINTS, ge=4)

    def cli_cmd(self):
        path = self.data or fetch_crime_data(self.cache_dir, offline=not self.fetch)
        records = load_community_records(path)
        estimator = EfronEstimator(p=self.p) if self.estimator == "efron" else KernelEstimator()
        report = crime_pipeline(records, b=self.b, seed=self.seed, estimator=estimator, noise=self.noise,
                                n_points=self.n_points)
        out = prepare_out_dir(self.out_dir)
        write_table(out / "posterior_curve.csv", ["p_hat", "prob_safe", "oracle_prob_safe"],
                    [report.p_hat, report.prob_safe,
                     [None if np.isnan(value) else value for value in report.oracle_prob_safe]])
        write_report(out / "crime_report.json", report.to_dict())
        write_manifest(out, "crime", self.model_dump(), ["posterior_curve.csv", "crime_report.json"],
                       inputs={"data": str(path)}, seed=self.seed)


class Hermite(OutFlags):
    """Normalized Hermite polynomials H_0..H_j at the given points."""
    j_max: int = Field(default=4, ge=0)
    x: List[float] = Field(default=[-2.0, -1.0, 0.0, 1.0, 2.0])

    def cli_cmd(self):
        values = hermite_matrix(self.j_max, np.asarray(self.x, dtype=float))
        out = prepare_out_dir(self.out_dir)
        header = ["x"] + [f"H{j}" for j in range(self.j_max + 1)]
        write_csv(str(out / "hermite.csv"), header, [self.x] + list(values))
        for point, row in zip(self.x, values.T):
            log.info(f"x={point:g}: " + " ".join(f"{value:.10g}" for value in row))
        write_manifest(out, "hermite", self.model_dump(), ["hermite.csv"])
