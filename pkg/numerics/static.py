""" Deconvolution toolkit constants, tolerances and the shared exception classes """
import logging as log

import numpy as np

# Section 1 - HELPER CONSTANTS DEFINITIONS
DEFAULT_N_POINTS = 1024
# default M in units of max(sigma, 1)
DEFAULT_DOMAIN_SCALE = 12.0
DEFAULT_WRAP_TERMS = 8
MIN_GRID_POINTS = 4
RECOMMENDED_GRID_POINTS = 16

WEIGHT_SUM_RTOL = 1e-12
DENSITY_TOLERANCE = 1e-8
SYMMETRY_TOLERANCE = 1e-10

# carriers below this fraction of their peak count as "has zeros" for P_g
DEGENERATE_CARRIER_RTOL = 1e-200
DEFAULT_CARRIER_FLOOR = 1e-10
MARGINAL_FLOOR = 1e-300
DEGENERATE_VARIANCE = 1e-12
DEGENERATE_BASIS_RTOL = 1e-10
DEGENERATE_SPECTRUM_GAP = 1e-10

DEFAULT_MAX_ITERATIONS = 200
DEFAULT_GRADIENT_RTOL = 1e-8
MAX_STEP_HALVINGS = 40
ARMIJO_FRACTION = 1e-4
# objective changes below this fraction of |loglik| are rounding noise
OBJECTIVE_NOISE_RTOL = 1e-12
NEWTON_DECREMENT_RTOL = 1e-14

UCI_CRIME_URL = (
    "https://archive.ics.uci.edu/ml/machine-learning-databases/00211/"
    "CommViolPredUnnormalizedData.txt"
)
CRIME_CACHE_ENV = "DECON_CACHE_DIR"
CRIME_SAFE_RATE = 0.02
CRIME_MIN_POPULATION = 20000

# Values quoted for the desk-scale experiments, reported but never asserted
PUBLISHED_ALPHA_SIGMA1_KAPPA2 = 1.7
PUBLISHED_RATIO_SIGMA1_KAPPA2 = 1.8
PUBLISHED_GENE_TARGET = 0.96
PUBLISHED_CRIME_SAFE_PROBABILITY = {
    "efron": 0.186,
    "kernel": 0.396,
    "oracle": 0.215,
}


# Section 2 - HELPER FUNCTIONS


def check_finite(values, name: str = "values") -> np.ndarray:
    """ Returns values as a float array, raising if anything is NaN or infinite

    :param values: array-like input
    :param str name: label used in the error message
    :return: Values as float ndarray
    :rtype: np.ndarray
    """
    array = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(array)):
        bad = np.flatnonzero(~np.isfinite(array.ravel()))
        raise InvalidArgumentError(f"{name} contains non-finite entries at flat indices {bad[:10].tolist()}")
    return array


def require_positive(value: float, name: str) -> float:
    """ Raises InvalidArgumentError unless value is a finite positive number

    :param float value:
    :param str name:
    :return: value as float
    :rtype: float
    """
    try:
        value = float(value)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"{name} must be a number, got {value!r}") from exc
    if not np.isfinite(value) or value <= 0:
        raise InvalidArgumentError(f"{name} must be positive, got {value}")
    return value


def require_same_grid(grid_a, grid_b, what: str = "operands"):
    """ Raises InvalidArgumentError if two grids are not the same discretization """
    if grid_a is grid_b:
        return
    if grid_a.n_points != grid_b.n_points or not np.isclose(grid_a.m_half, grid_b.m_half, rtol=0, atol=1e-12):
        log.debug(f"grid mismatch: M={grid_a.m_half}/{grid_b.m_half}, n={grid_a.n_points}/{grid_b.n_points}")
        raise InvalidArgumentError(f"{what} live on different grids")


# Section 3 - HELPER CLASSES


class DeconvolutionError(Exception):
    """Base class for every error raised by the toolkit."""


class InvalidArgumentError(DeconvolutionError, ValueError):
    """Precondition violated by a caller-supplied value."""


class NumericalFailure(DeconvolutionError, ArithmeticError):
    """A computation could not produce a trustworthy number."""


class NumericOverflowError(NumericalFailure):
    pass


class DegenerateMarginalError(NumericalFailure):
    pass


class DegenerateStatisticError(NumericalFailure):
    pass


class DegenerateBasisError(NumericalFailure):
    pass


class DegenerateCarrierError(NumericalFailure):
    pass


class DegenerateDirectionError(NumericalFailure):
    pass


class UnstableBandwidthError(NumericalFailure):
    pass


class NonConvergenceError(NumericalFailure):
    """Raised by callers that treat a non-converged fit as fatal (the CLI)."""


class ReplicateFailureError(NumericalFailure):
    """Too many replicates of a simulation failed."""


class ExternalResourceError(DeconvolutionError, OSError):
    """A dataset download or an input file could not be obtained."""


class ExitCodes:
    SUCCESS = 0
    USAGE = 2
    NUMERICAL = 3
    EXTERNAL = 4

    @classmethod
    def for_exception(cls, exc: BaseException) -> int:
        """Maps an exception to the CLI exit status
        :param BaseException exc: the raised exception
        """
        if isinstance(exc, ExternalResourceError):
            return cls.EXTERNAL
        if isinstance(exc, NumericalFailure):
            return cls.NUMERICAL
        return cls.USAGE
