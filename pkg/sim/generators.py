""" Draws from the hierarchical model mu ~ g, X = mu + N(0, 1) on the cyclic domain """
import logging as log
from typing import Union

import numpy as np

from numerics.grid import DensityVector
from numerics.static import InvalidArgumentError

SeedLike = Union[int, np.random.Generator]


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_latent(g: DensityVector, n: int, rng: np.random.Generator) -> np.ndarray:
    """ Inverse-CDF draws from a grid density, jittered uniformly inside each cell """
    grid = g.grid
    cdf = g.cdf()
    cells = np.searchsorted(cdf, rng.uniform(0.0, cdf[-1], size=n), side="right")
    cells = np.minimum(cells, grid.n_points - 1)
    jitter = rng.uniform(-0.5, 0.5, size=n) * grid.spacing
    return grid.points[cells] + jitter


def sample_hierarchical(g: DensityVector, n: int, seed: SeedLike, return_latent: bool = False):
    """ n noisy observations from g

    :param DensityVector g: density of the latent mu
    :param int n: sample count
    :param seed: integer seed or numpy Generator
    :param bool return_latent: also return the latent mu draws
    :return: X wrapped into [-M, M), or (X, mu)
    """
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"sample count must be a positive integer, got {n}")
    rng = make_rng(seed)
    latent = sample_latent(g, int(n), rng)
    observed = g.grid.wrap(latent + rng.standard_normal(int(n)))
    log.debug(f"drew {n} hierarchical samples on M={g.grid.m_half}")
    if return_latent:
        return observed, latent
    return observed
