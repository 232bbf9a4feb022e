""" Losses between a true and an estimated grid density """
import math

import numpy as np
from scipy.special import rel_entr

from numerics.grid import DensityVector, quad
from numerics.static import require_positive


def kl_loss(g_true: DensityVector, g_hat: DensityVector) -> float:
    """ KL(g, g_hat) = integral of g log(g / g_hat); inf when g_hat misses part of the support of g """
    g_true.same_grid(g_hat)
    terms = rel_entr(g_true.values, g_hat.values)
    if np.any(np.isinf(terms)):
        return math.inf
    return max(quad(g_true.grid, terms), 0.0)


def scaled_deviance(n: int, g_true: DensityVector, g_hat: DensityVector) -> float:
    """ n * KL(g, g_hat) """
    return require_positive(n, "n") * kl_loss(g_true, g_hat)


def ise_loss(g_true: DensityVector, g_hat: DensityVector) -> float:
    """ Integrated squared error of g_hat """
    g_true.same_grid(g_hat)
    return quad(g_true.grid, (g_hat.values - g_true.values) ** 2)
