""" Safe-community analysis on down-sampled crime counts

Each community's non-violent crime count is re-observed by interviewing B residents
(hypergeometric draw), the rate estimate is variance-stabilized by a square root and
deconvolved, and the fitted prior gives P(rate <= 0.02 | observed rate).
"""
import logging as log
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
import pandas as pd
from scipy.stats import hypergeom

from expfam.basis import hermite_basis, polynomial_basis
from expfam.fit import FitOptions, fit_mle
from numerics.grid import make_grid
from numerics.kernels import cyclic_kernel
from numerics.static import (
    CRIME_CACHE_ENV,
    CRIME_MIN_POPULATION,
    CRIME_SAFE_RATE,
    DEFAULT_N_POINTS,
    PUBLISHED_CRIME_SAFE_PROBABILITY,
    UCI_CRIME_URL,
    ExternalResourceError,
    InvalidArgumentError,
)
from sim.carriers import carrier_library
from sim.generators import make_rng
from sim.kernel_baseline import kernel_deconv_baseline
from sim.runner import EfronEstimator, KernelEstimator
from utils import create_folder_if_does_not_exist, get_file_name_from_url, read_csv, run_shell_command

# column positions in the raw unnormalized file
RAW_NAME_COLUMN = 0
RAW_POPULATION_COLUMN = 5
RAW_NONVIOLENT_COLUMNS = (137, 139, 141, 143)  # burglaries, larcenies, autoTheft, arsons
TIDY_HEADER = ("community", "population", "nonviolent_crimes")
NOISE_MARGIN = 8.0


@dataclass(frozen=True)
class CommunityRecord:
    community: str
    population: int
    nonviolent_crimes: int

    def __post_init__(self):
        if self.population < 1:
            raise InvalidArgumentError(f"{self.community}: population must be positive, got {self.population}")
        if not 0 <= self.nonviolent_crimes <= self.population:
            raise InvalidArgumentError(
                f"{self.community}: {self.nonviolent_crimes} crimes for population {self.population}")

    @property
    def rate(self) -> float:
        return self.nonviolent_crimes / self.population


def default_cache_dir() -> Path:
    return Path(os.environ.get(CRIME_CACHE_ENV, Path.home() / ".cache" / "decon_efficiency"))


def fetch_crime_data(cache_dir: Optional[str] = None, url: str = UCI_CRIME_URL, offline: bool = False) -> Path:
    """ Local path of the raw crime file, downloading it into the cache when missing

    :param str cache_dir: cache folder, defaults to $DECON_CACHE_DIR or ~/.cache/decon_efficiency
    :param str url: download location
    :param bool offline: never download, fail when the file is not cached
    :return: Path to the cached file
    """
    folder = Path(cache_dir) if cache_dir else default_cache_dir()
    target = folder / get_file_name_from_url(url)
    if target.exists() and target.stat().st_size > 0:
        log.info(f"Using cached crime data {target}")
        return target
    if offline:
        raise ExternalResourceError(f"{target} is not cached; download {url} there or pass --data")
    create_folder_if_does_not_exist(str(folder))
    log.info(f"Downloading crime data from {url}")
    try:
        ret = run_shell_command(["curl", "-fsSL", "--retry", "2", "-o", str(target), url], timeout=300)
    except (OSError, ValueError) as exc:
        raise ExternalResourceError(f"could not run curl: {exc}; download {url} to {target} manually") from exc
    if ret.returncode != 0 or not target.exists():
        log.error(f"Error downloading crime data - {ret.returncode}")
        if target.exists():
            target.unlink()
        raise ExternalResourceError(
            f"download of {url} failed ({ret.stderr.strip()}); place the file at {target} or pass --data")
    return target


def load_community_records(path) -> List[CommunityRecord]:
    """ Reads the tidy CSV (community,population,nonviolent_crimes) or the raw UCI file

    Rows with missing counts or inconsistent totals are dropped and counted in the log.

    :param path: file location
    :return: list of CommunityRecord
    """
    path = Path(path)
    if not path.exists():
        raise ExternalResourceError(f"crime data file {path} does not exist")
    try:
        header = read_csv(str(path), nrows=0, encoding_errors="replace")
    except ValueError as exc:
        raise ExternalResourceError(f"crime data file {path} is unreadable: {exc}") from exc

    if tuple(name.lower() for name in header.columns) == TIDY_HEADER:
        frame = read_csv(str(path), na_values="?")
        frame.columns = list(TIDY_HEADER)
        crimes = pd.to_numeric(frame["nonviolent_crimes"], errors="coerce")
    else:
        frame = pd.read_csv(path, header=None, na_values="?", skipinitialspace=True, encoding_errors="replace",
                            on_bad_lines="skip")
        frame = frame.rename(columns={RAW_NAME_COLUMN: "community", RAW_POPULATION_COLUMN: "population"})
        if frame.shape[1] <= max(RAW_NONVIOLENT_COLUMNS):
            raise ExternalResourceError(f"{path} has {frame.shape[1]} columns, expected the raw crime layout")
        parts = frame[list(RAW_NONVIOLENT_COLUMNS)].apply(pd.to_numeric, errors="coerce")
        crimes = parts.sum(axis=1, min_count=len(RAW_NONVIOLENT_COLUMNS))
    population = pd.to_numeric(frame["population"], errors="coerce")

    records, dropped = [], 0
    for name, people, count in zip(frame["community"].astype(str), population, crimes):
        if np.isnan(people) or np.isnan(count):
            dropped += 1
            continue
        try:
            records.append(CommunityRecord(community=name.strip(), population=int(round(people)),
                                           nonviolent_crimes=int(round(count))))
        except InvalidArgumentError:
            dropped += 1
    if dropped:
        log.warning(f"dropped {dropped} rows with missing or inconsistent crime data from {path}")
    log.info(f"Loaded {len(records)} communities from {path}")
    return records


def downsample_counts(records: List[CommunityRecord], b: int, rng: np.random.Generator) -> np.ndarray:
    """ N_i ~ Hypergeometric(B draws, crimes_i successes, population_i total) """
    crimes = np.array([record.nonviolent_crimes for record in records], dtype=np.int64)
    population = np.array([record.population for record in records], dtype=np.int64)
    return rng.hypergeometric(crimes, population - crimes, b)


def oracle_safe_probability(records: List[CommunityRecord], b: int, counts,
                            threshold: float = CRIME_SAFE_RATE) -> np.ndarray:
    """ Exact P(rate <= threshold | N = k) when communities are equally likely a priori """
    crimes = np.array([record.nonviolent_crimes for record in records])
    population = np.array([record.population for record in records])
    safe = crimes <= threshold * population
    counts = np.asarray(counts)
    pmf = hypergeom.pmf(counts[:, None], population[None, :], crimes[None, :], b)
    total = pmf.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, (pmf * safe).sum(axis=1) / total, np.nan)


@dataclass(frozen=True, eq=False)
class CrimeReport:
    n_communities: int
    b: int
    seed: int
    estimator: str
    noise_sd: float
    threshold: float
    true_safe_fraction: float
    center: float
    m_half: float
    p_hat: np.ndarray = field(repr=False)
    prob_safe: np.ndarray = field(repr=False)
    oracle_prob_safe: np.ndarray = field(repr=False)
    monotone: bool = True

    def at_threshold(self) -> dict:
        index = int(np.argmin(np.abs(self.p_hat - self.threshold)))
        return {
            "p_hat": float(self.p_hat[index]),
            "prob_safe": float(self.prob_safe[index]),
            "oracle_prob_safe": float(self.oracle_prob_safe[index]),
            "published": PUBLISHED_CRIME_SAFE_PROBABILITY,
        }

    def to_dict(self) -> dict:
        return {
            "n_communities": self.n_communities,
            "b": self.b,
            "seed": self.seed,
            "estimator": self.estimator,
            "noise_sd": self.noise_sd,
            "threshold": self.threshold,
            "true_safe_fraction": self.true_safe_fraction,
            "center": self.center,
            "m_half": self.m_half,
            "monotone": self.monotone,
            "at_threshold": self.at_threshold(),
        }


def crime_pipeline(records: List[CommunityRecord], b: int = 500, seed: int = 0, estimator=None,
                   noise: Literal["delta", "unit"] = "delta", n_points: int = DEFAULT_N_POINTS,
                   threshold: float = CRIME_SAFE_RATE) -> CrimeReport:
    """ Down-samples, deconvolves sqrt(p_hat) and returns P(p <= threshold | p_hat) on the observable lattice

    :param records: communities; only those above the population cut are used
    :param int b: interviews per community
    :param int seed:
    :param estimator: EfronEstimator or KernelEstimator, Efron with a degree-4 polynomial by default
    :param str noise: delta for sd 1 / (2 sqrt(B)), unit for sd 1 / sqrt(B)
    :param int n_points: grid size
    :param float threshold: safe-rate cut
    :return: CrimeReport
    """
    if int(b) != b or b < 1:
        raise InvalidArgumentError(f"B must be a positive integer, got {b}")
    b = int(b)
    estimator = estimator or EfronEstimator()
    kept = [record for record in records if record.population > CRIME_MIN_POPULATION]
    if not kept:
        raise InvalidArgumentError(f"no community with population above {CRIME_MIN_POPULATION}")
    if any(record.population < b for record in kept):
        raise InvalidArgumentError(f"B={b} exceeds the population of some communities")
    log.info(f"crime pipeline on {len(kept)} of {len(records)} communities, B={b}, seed={seed}")

    rng = make_rng(seed)
    counts = downsample_counts(kept, b, rng)
    noise_sd = 1.0 / (2.0 * np.sqrt(b)) if noise == "delta" else 1.0 / np.sqrt(b)
    observed = np.sqrt(counts / b) / noise_sd

    lattice = np.arange(0, max(int(counts.max()), int(np.ceil(threshold * b))) + 1)
    p_hat = lattice / b
    if not np.any(np.isclose(p_hat, threshold)):
        p_hat = np.sort(np.append(p_hat, threshold))
    # the grid covers every lattice point from p_hat = 0 up, not only the observed counts
    top = float(np.sqrt(p_hat[-1]) / noise_sd)
    center = 0.5 * top
    m_half = center + NOISE_MARGIN
    grid = make_grid(m_half, n_points)
    shifted = observed - center
    kernel = cyclic_kernel(grid)

    if isinstance(estimator, KernelEstimator):
        g_hat = kernel_deconv_baseline(shifted, grid, estimator.bandwidth_rule, estimator.bandwidth,
                                       estimator.deconvolve)
    else:
        carrier = carrier_library(estimator.carrier, grid)
        build = polynomial_basis if estimator.basis == "poly" else hermite_basis
        fit = fit_mle(carrier, build(grid, estimator.p), shifted,
                      FitOptions(ridge=estimator.ridge, max_iterations=estimator.max_iterations), kernel=kernel)
        if not fit.converged:
            log.warning("crime fit did not converge, the posterior curve uses the last iterate")
        g_hat = fit.g_hat

    x_curve = np.sqrt(p_hat) / noise_sd - center
    safe_latent = grid.points <= np.sqrt(threshold) / noise_sd - center
    weighted = kernel.row(x_curve) * (g_hat.values * grid.weights)
    prob_safe = (weighted * safe_latent).sum(axis=1) / weighted.sum(axis=1)

    on_lattice = np.isclose(p_hat * b, np.round(p_hat * b))
    oracle = np.full(p_hat.size, np.nan)
    oracle[on_lattice] = oracle_safe_probability(kept, b, np.round(p_hat[on_lattice] * b).astype(int), threshold)

    monotone = bool(np.all(np.diff(prob_safe) <= 1e-9))
    if not monotone:
        log.warning("estimated P(safe | p_hat) is not monotone in p_hat")
    true_safe = float(np.mean([record.rate <= threshold for record in kept]))
    return CrimeReport(n_communities=len(kept), b=b, seed=seed, estimator=estimator.kind, noise_sd=float(noise_sd),
                       threshold=threshold, true_safe_fraction=true_safe, center=center, m_half=m_half, p_hat=p_hat,
                       prob_safe=prob_safe, oracle_prob_safe=oracle, monotone=monotone)
