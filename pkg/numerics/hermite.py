""" Normalized Hermite polynomials H_j(x) = (1/sqrt(j!)) e^{x^2/2} d^j/dx^j e^{-x^2/2}

With this sign convention H_j = (-1)^j He_j / sqrt(j!), He_j the probabilists'
polynomials. The H_j are orthonormal under the standard Gaussian; spans and
squared quantities do not depend on the sign.
"""
import numpy as np

from numerics.static import InvalidArgumentError


def _check_order(j) -> int:
    if int(j) != j or j < 0:
        raise InvalidArgumentError(f"Hermite order must be a nonnegative integer, got {j}")
    return int(j)


def hermite_matrix(j_max: int, x) -> np.ndarray:
    """ All normalized Hermite polynomials of order 0..j_max at x

    Uses the orthonormal form of He_{j+1} = x He_j - j He_{j-1}, which stays
    bounded for moderate x where the unnormalized recurrence overflows.

    :param int j_max: highest order
    :param x: scalar or array
    :return: array of shape (j_max + 1,) + shape(x)
    :rtype: np.ndarray
    """
    j_max = _check_order(j_max)
    x = np.asarray(x, dtype=float)
    out = np.empty((j_max + 1,) + x.shape)
    out[0] = 1.0
    if j_max >= 1:
        out[1] = x
    for k in range(1, j_max):
        out[k + 1] = (x * out[k] - np.sqrt(k) * out[k - 1]) / np.sqrt(k + 1.0)
    signs = np.where(np.arange(j_max + 1) % 2 == 0, 1.0, -1.0)
    return out * signs.reshape((-1,) + (1,) * x.ndim)


def hermite(j: int, x):
    """ Normalized Hermite polynomial H_j at x

    :param int j: order
    :param x: scalar or array
    :return: float for scalar x, array otherwise
    """
    values = hermite_matrix(_check_order(j), x)[j]
    return float(values) if np.ndim(values) == 0 else values
