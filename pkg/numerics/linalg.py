""" Symmetric eigendecomposition with a deterministic ordering and sign convention """
import logging as log

import numpy as np
import scipy.linalg

from numerics.static import SYMMETRY_TOLERANCE, InvalidArgumentError, check_finite


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """ Flips each column so that its largest-magnitude entry is positive

    :param np.ndarray vectors: matrix with vectors as columns
    :return: sign-normalized copy
    """
    vectors = np.array(vectors, dtype=float, copy=True)
    if vectors.size == 0:
        return vectors
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eigen(matrix):
    """ Eigen-decomposition of a real symmetric matrix

    The input is symmetrized as (A + A^T) / 2 before calling LAPACK.

    :param matrix: n x n real matrix, symmetric up to round-off
    :return: (eigenvalues sorted descending, orthonormal eigenvectors as columns)
    :rtype: tuple
    """
    matrix = check_finite(matrix, "matrix")
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidArgumentError(f"sym_eigen needs a square matrix, got shape {matrix.shape}")
    asymmetry = np.max(np.abs(matrix - matrix.T)) if matrix.size else 0.0
    scale = max(np.max(np.abs(matrix)) if matrix.size else 0.0, 1.0)
    if asymmetry > SYMMETRY_TOLERANCE * scale:
        log.debug(f"symmetrizing matrix with asymmetry {asymmetry:.3e}")
    symmetric = 0.5 * (matrix + matrix.T)
    eigenvalues, eigenvectors = scipy.linalg.eigh(symmetric)
    order = np.argsort(eigenvalues, kind="stable")[::-1]
    return eigenvalues[order], fix_signs(eigenvectors[:, order])


def psd_inverse_sqrt(matrix, rtol: float = 1e-12):
    """ Returns Q with Q^T A Q = I for a symmetric positive definite A

    :param matrix: symmetric positive definite matrix
    :param float rtol: eigenvalues below rtol * largest are treated as zero
    :return: (Q, eigenvalues of A); Q is None when A is numerically singular
    """
    eigenvalues, eigenvectors = sym_eigen(matrix)
    top = eigenvalues[0] if eigenvalues.size else 0.0
    if eigenvalues.size == 0 or top <= 0 or eigenvalues[-1] <= rtol * top:
        return None, eigenvalues
    return eigenvectors / np.sqrt(eigenvalues), eigenvalues
