""" Replicated deconvolution experiments driven by a JSON configuration """
import json
import logging as log
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from expfam.basis import hermite_basis, polynomial_basis
from expfam.fit import FitOptions, fit_mle
from numerics.grid import DensityVector, Grid
from numerics.kernels import KernelMatrix, cyclic_kernel
from numerics.static import (
    DeconvolutionError,
    InvalidArgumentError,
    ReplicateFailureError,
)
from sim.carriers import CarrierSpec, GridConfig, UniformCarrier, carrier_library
from sim.generators import sample_hierarchical
from sim.kernel_baseline import kernel_deconv_baseline
from sim.losses import ise_loss, kl_loss, scaled_deviance

CONFIG_DIR = Path(__file__).parent / "config"
MAX_FAILURE_FRACTION = 0.1
SUMMARY_QUANTILES = (0.1, 0.25, 0.5, 0.75, 0.9)


class EfronEstimator(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")
    kind: Literal["efron"] = "efron"
    p: int = Field(default=4, ge=1)
    basis: Literal["poly", "hermite"] = "poly"
    carrier: CarrierSpec = UniformCarrier()
    ridge: float = Field(default=0.0, ge=0)
    max_iterations: int = Field(default=200, ge=1)


class KernelEstimator(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")
    kind: Literal["kernel"] = "kernel"
    bandwidth_rule: Literal["plug-in", "fixed"] = "plug-in"
    bandwidth: Optional[float] = Field(default=None, gt=0)
    deconvolve: bool = True


EstimatorSpec = Annotated[Union[EfronEstimator, KernelEstimator], Field(discriminator="kind")]


class SimConfig(BaseModel):
    """One experiment: the true g, how many samples, how often, and which estimator."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "simulation"
    carrier_spec: CarrierSpec
    n: int = Field(ge=1)
    replicates: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    estimator: EstimatorSpec
    grid: GridConfig = GridConfig()
    target: Tuple[float, float] = (-2.0, 2.0)


@dataclass(frozen=True)
class ReplicateRecord:
    index: int
    seed: int
    status: str
    converged: Optional[bool]
    kl: float
    deviance: float
    ise: float
    functional: float
    message: str = ""


@dataclass(frozen=True)
class SimResult:
    config: SimConfig
    records: List[ReplicateRecord]
    truth_functional: float

    def rows(self) -> List[dict]:
        return [asdict(record) for record in self.records]

    def summary(self) -> dict:
        """ Quantiles of each loss and of the target functional over successful replicates """
        good = [record for record in self.records if record.status == "ok"]
        summary = {
            "name": self.config.name,
            "replicates": len(self.records),
            "failures": len(self.records) - len(good),
            "truth_functional": self.truth_functional,
            "target": list(self.config.target),
        }
        for metric in ("kl", "deviance", "ise", "functional"):
            values = np.sort(np.array([getattr(record, metric) for record in good], dtype=float))
            summary[metric] = _quantiles(values)
        errors = np.sort(np.abs(np.array([record.functional for record in good]) - self.truth_functional))
        summary["functional_abs_error"] = _quantiles(errors)
        return summary


def _quantiles(values: np.ndarray) -> dict:
    if values.size == 0:
        return {f"q{int(100 * q)}": None for q in SUMMARY_QUANTILES}
    return {f"q{int(100 * q)}": float(np.quantile(values, q)) for q in SUMMARY_QUANTILES}


def config_path(config) -> Path:
    """ Path of a config file given by path or by preset name from sim/config """
    path = Path(config)
    if not path.exists() and (CONFIG_DIR / f"{config}.json").exists():
        return CONFIG_DIR / f"{config}.json"
    return path


def parse_sim_config(config) -> SimConfig:
    """
    Read a simulation config JSON file, by path or by preset name
    from sim/config, and validate it
    """
    path = config_path(config)
    with open(path, 'r') as config_json:
        sim_config = json.load(config_json)
    log.info(f"Completed reading simulation config file {path}")
    return SimConfig.model_validate(sim_config)


def list_presets() -> List[str]:
    return sorted(path.stem for path in CONFIG_DIR.glob("*.json"))


def estimate_density(estimator, samples, grid: Grid, kernel: KernelMatrix, terms: int):
    """ Fitted g on the grid and, for the exponential family, whether the fit converged """
    if isinstance(estimator, KernelEstimator):
        g_hat = kernel_deconv_baseline(samples, grid, estimator.bandwidth_rule, estimator.bandwidth,
                                       estimator.deconvolve)
        return g_hat, None
    carrier = carrier_library(estimator.carrier, grid, terms)
    build = polynomial_basis if estimator.basis == "poly" else hermite_basis
    basis = build(grid, estimator.p)
    options = FitOptions(ridge=estimator.ridge, max_iterations=estimator.max_iterations, out_of_domain="wrap")
    result = fit_mle(carrier, basis, samples, options, kernel=kernel)
    return result.g_hat, result.converged


def _run_one(config: SimConfig, index: int, truth: DensityVector, kernel: KernelMatrix,
             truth_functional: float) -> ReplicateRecord:
    seed = config.seed + index
    try:
        samples = sample_hierarchical(truth, config.n, seed)
        g_hat, converged = estimate_density(config.estimator, samples, truth.grid, kernel, config.grid.terms)
        record = ReplicateRecord(
            index=index, seed=seed, status="ok", converged=converged,
            kl=kl_loss(truth, g_hat),
            deviance=scaled_deviance(config.n, truth, g_hat),
            ise=ise_loss(truth, g_hat),
            functional=g_hat.mass_between(*config.target),
        )
    except (DeconvolutionError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log.exception(f"replicate {index} (seed {seed}) failed")
        return ReplicateRecord(index=index, seed=seed, status="failed", converged=None, kl=float("nan"),
                               deviance=float("nan"), ise=float("nan"), functional=float("nan"), message=str(exc))
    log.debug(f"replicate {index}: functional {record.functional:.4f}, kl {record.kl:.4g}")
    return record


def run_replicates(config: SimConfig, workers: int = 1) -> SimResult:
    """ Runs every replicate of an experiment

    Replicate i draws its data with seed config.seed + i, so the records do not
    depend on the number of workers.

    :param SimConfig config:
    :param int workers: thread pool size
    :return: SimResult with one record per replicate, in index order
    """
    if workers < 1:
        raise InvalidArgumentError(f"workers must be positive, got {workers}")
    grid = config.grid.build()
    truth = carrier_library(config.carrier_spec, grid, config.grid.terms)
    kernel = cyclic_kernel(grid, config.grid.terms)
    truth_functional = truth.mass_between(*config.target)
    log.info(f"running {config.replicates} replicates of '{config.name}' with {workers} worker(s)")

    indices = range(config.replicates)
    if workers == 1:
        records = [_run_one(config, index, truth, kernel, truth_functional) for index in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda index: _run_one(config, index, truth, kernel, truth_functional), indices))

    failures = sum(record.status == "failed" for record in records)
    if failures > MAX_FAILURE_FRACTION * config.replicates:
        raise ReplicateFailureError(f"{failures} of {config.replicates} replicates failed")
    if failures:
        log.warning(f"{failures} of {config.replicates} replicates failed")
    return SimResult(config=config, records=records, truth_functional=truth_functional)
