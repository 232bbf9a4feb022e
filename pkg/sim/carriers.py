""" Library of true and carrier densities used by the experiments """
import logging as log
from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from numerics.grid import DensityVector, Grid, make_grid
from numerics.kernels import wrapped_gaussian
from numerics.static import DEFAULT_N_POINTS, DEFAULT_WRAP_TERMS, InvalidArgumentError


class _Spec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class GridConfig(_Spec):
    m_half: float = Field(default=16.0, gt=0)
    n_points: int = Field(default=DEFAULT_N_POINTS, ge=4)
    terms: int = Field(default=DEFAULT_WRAP_TERMS, ge=1)

    def build(self) -> Grid:
        return make_grid(self.m_half, self.n_points)


class GaussianCarrier(_Spec):
    kind: Literal["gaussian"] = "gaussian"
    sigma: float = Field(default=1.0, gt=0)
    center: float = 0.0


class TwoTowersCarrier(_Spec):
    """Variant 1: mass on 1 <= |mu| <= 2. Variant 2: mass on 3 <= |mu| <= 6."""
    kind: Literal["two_towers"] = "two_towers"
    variant: Literal[1, 2] = 1


class GaussSpikeCarrier(_Spec):
    """Half N(0, 2), half a point mass realized on the grid cell nearest to location."""
    kind: Literal["gauss_spike"] = "gauss_spike"
    location: float = 0.0
    variance: float = Field(default=2.0, gt=0)
    spike_weight: float = Field(default=0.5, gt=0, lt=1)


class GeneMixtureCarrier(_Spec):
    """0.95 triangular on [-2, 2] plus 0.05 uniform on [-10, 10]."""
    kind: Literal["gene_mixture"] = "gene_mixture"


class BumpCarrier(_Spec):
    """Proportional to exp(-mu^2 / (mu^2 + 4)) on |mu| < 2, zero elsewhere."""
    kind: Literal["bump"] = "bump"


class UniformCarrier(_Spec):
    kind: Literal["uniform"] = "uniform"
    half_width: Optional[float] = Field(default=None, gt=0)


class CustomCarrier(_Spec):
    kind: Literal["custom"] = "custom"
    values: List[float]


CarrierSpec = Annotated[
    Union[GaussianCarrier, TwoTowersCarrier, GaussSpikeCarrier, GeneMixtureCarrier, BumpCarrier, UniformCarrier,
          CustomCarrier],
    Field(discriminator="kind"),
]

TOWER_SUPPORT = {1: (1.0, 2.0), 2: (3.0, 6.0)}
GENE_CORE_WEIGHT = 0.95
GENE_CORE_HALF_WIDTH = 2.0
GENE_TAIL_HALF_WIDTH = 10.0
BUMP_HALF_WIDTH = 2.0


def support_half_width(spec) -> float:
    """ Smallest M whose domain holds the whole support of the density """
    if isinstance(spec, TwoTowersCarrier):
        return TOWER_SUPPORT[spec.variant][1]
    if isinstance(spec, GeneMixtureCarrier):
        return GENE_TAIL_HALF_WIDTH
    if isinstance(spec, BumpCarrier):
        return BUMP_HALF_WIDTH
    if isinstance(spec, GaussSpikeCarrier):
        return abs(spec.location)
    if isinstance(spec, UniformCarrier):
        return spec.half_width or 0.0
    return 0.0


def _gene_mixture(points: np.ndarray) -> np.ndarray:
    core = np.clip(GENE_CORE_HALF_WIDTH - np.abs(points), 0.0, None) / GENE_CORE_HALF_WIDTH ** 2
    tail = (np.abs(points) <= GENE_TAIL_HALF_WIDTH) / (2.0 * GENE_TAIL_HALF_WIDTH)
    return GENE_CORE_WEIGHT * core + (1.0 - GENE_CORE_WEIGHT) * tail


def _bump(points: np.ndarray) -> np.ndarray:
    inside = np.abs(points) < BUMP_HALF_WIDTH
    return np.where(inside, np.exp(-points ** 2 / (points ** 2 + 4.0)), 0.0)


def carrier_library(spec, grid: Grid, terms: int = DEFAULT_WRAP_TERMS) -> DensityVector:
    """ Grid density for one carrier specification

    :param spec: one of the CarrierSpec models
    :param Grid grid:
    :param int terms: wrap terms for Gaussian components
    :return: normalized DensityVector
    """
    needed = support_half_width(spec)
    if needed > grid.m_half:
        raise InvalidArgumentError(f"{spec.kind} carrier needs M >= {needed}, grid has M = {grid.m_half}")
    points = grid.points

    if isinstance(spec, GaussianCarrier):
        return wrapped_gaussian(grid, spec.sigma, terms=terms, center=spec.center)
    if isinstance(spec, TwoTowersCarrier):
        low, high = TOWER_SUPPORT[spec.variant]
        values = ((np.abs(points) >= low) & (np.abs(points) <= high)).astype(float)
    elif isinstance(spec, GaussSpikeCarrier):
        smooth = wrapped_gaussian(grid, np.sqrt(spec.variance), terms=terms).values
        spike = np.zeros(grid.n_points)
        spike[grid.nearest_index(spec.location)] = 1.0 / grid.spacing
        values = (1.0 - spec.spike_weight) * smooth + spec.spike_weight * spike
    elif isinstance(spec, GeneMixtureCarrier):
        values = _gene_mixture(points)
    elif isinstance(spec, BumpCarrier):
        values = _bump(points)
    elif isinstance(spec, UniformCarrier):
        half_width = spec.half_width or grid.m_half
        values = (np.abs(points) <= half_width).astype(float)
    elif isinstance(spec, CustomCarrier):
        values = np.asarray(spec.values, dtype=float)
        if values.shape != (grid.n_points,):
            raise InvalidArgumentError(f"custom carrier has {values.size} values for {grid.n_points} grid points")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise InvalidArgumentError("custom carrier values must be finite and nonnegative")
    else:
        raise InvalidArgumentError(f"unknown carrier specification {spec!r}")

    if not np.any(values > 0):
        raise InvalidArgumentError(f"{spec.kind} carrier has no grid point in its support at this resolution")
    density = DensityVector.normalized(grid, values)
    log.debug(f"{spec.kind} carrier on M={grid.m_half}, n={grid.n_points}: mean {density.mean():.4g}")
    return density
