"""
The memoryless discrete-time Poisson channel (DTPC).

For an input release rate x >= 0 the receiver counts Y ~ Pois(rho * x + lambda)
molecules, independently for every channel use. This module evaluates the letter
and sequence laws in the log domain (log-gamma for y!) and draws exact Poisson
samples for the simulator.

Sampling:
    Letters with mean <= INVERSION_LIMIT are drawn by inversion: one uniform per
    letter, compared against the cumulative pmf built by sequential summation.
    Letters with a larger mean fall back to numpy's Poisson generator, which is an
    exact transformed-rejection method (PTRS), so draws stay unbiased outside the
    small-mean regime.

Classes:
    ChannelParams: rho (capture factor) and lam (interference mean).

Functions:
    mean_count, variance, letter_log_pmf, letter_log2_pmf, letter_pmf,
    sequence_log_pmf, sequence_pmf, sample, sample_block.
"""

import logging
import math

from dataclasses import dataclass

import numpy as np

from dataclasses_json import dataclass_json
from scipy.special import gammaln

from di_poisson.core.domain import ArrayLike, Observation, ParameterError
from di_poisson.core.rng import RandomStream

logger = logging.getLogger(__name__)

INVERSION_LIMIT = 30.0
# cdf table reaches mu + TAIL_SIGMAS * sqrt(mu) + TAIL_PAD; the remaining mass is
# far below double precision for every mean up to INVERSION_LIMIT
TAIL_SIGMAS = 12.0
TAIL_PAD = 30


@dataclass_json
@dataclass(frozen=True)
class ChannelParams:
    """
    Parameters of the DTPC law Y = Pois(rho * X + lam).

    Attributes
    ----------
    rho : float
        Capture factor rho = p_ch * T_rls (> 0).
    lam : float
        Mean number of interfering molecules lambda (> 0).
    """

    rho: float
    lam: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ParameterError(f"rho must be positive, got {self.rho}")
        if not self.lam > 0:
            raise ParameterError(f"lambda must be positive, got {self.lam}")

    @classmethod
    def from_release(cls, p_ch: float, t_rls: float, lam: float) -> "ChannelParams":
        """Build the channel from the arrival probability and the release time."""
        if not 0 < p_ch <= 1:
            raise ParameterError(f"p_ch must lie in (0, 1], got {p_ch}")
        if not t_rls > 0:
            raise ParameterError(f"t_rls must be positive, got {t_rls}")
        return cls(rho=p_ch * t_rls, lam=lam)


def _as_input(x: ArrayLike) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ParameterError("channel inputs must be non-negative")
    return x


def _as_counts(y: ArrayLike) -> np.ndarray:
    y = np.asarray(y)
    if y.size and (np.any(y < 0) or np.any(np.floor(y) != y)):
        raise ParameterError("observations must be non-negative integers")
    return y.astype(np.int64)


def mean_count(params: ChannelParams, x: float) -> float:
    """
    Return the mean molecule count rho * x + lam for input x.

    Raises
    ------
    ParameterError
        If x is negative.
    """
    if x < 0:
        raise ParameterError(f"input must be non-negative, got {x}")
    return params.rho * x + params.lam


def mean_counts(params: ChannelParams, x: ArrayLike) -> np.ndarray:
    """Vectorised ``mean_count`` over a codeword (or a stack of codewords)."""
    return params.rho * _as_input(x) + params.lam


def variance(params: ChannelParams, x: float) -> float:
    """The count variance, equal to the mean: the noise is signal dependent."""
    return mean_count(params, x)


def letter_log_pmf(params: ChannelParams, x: float, y: int) -> float:
    """
    Natural log of W(y|x) = exp(-mu) mu^y / y! with mu = rho * x + lam.

    Parameters
    ----------
    params : ChannelParams
        The channel.
    x : float
        Input release rate (>= 0).
    y : int
        Observed count (>= 0).

    Returns
    -------
    float
        The log-probability in nats.
    """
    mu = mean_count(params, x)
    if y < 0 or int(y) != y:
        raise ParameterError(f"count must be a non-negative integer, got {y}")
    return y * math.log(mu) - mu - float(gammaln(y + 1))


def letter_log2_pmf(params: ChannelParams, x: float, y: int) -> float:
    """``letter_log_pmf`` in bits."""
    return letter_log_pmf(params, x, y) / math.log(2)


def letter_pmf(params: ChannelParams, x: float, y: int) -> float:
    return math.exp(letter_log_pmf(params, x, y))


def sequence_log_pmf(params: ChannelParams, x: ArrayLike, y: ArrayLike) -> float:
    """
    Log-probability of observing y when codeword x is sent (memoryless product law).

    Raises
    ------
    ParameterError
        If x and y differ in length or the common length is zero.
    """
    x = _as_input(x)
    y = _as_counts(y)
    if x.shape != y.shape or x.ndim != 1:
        raise ParameterError(f"length mismatch: input {x.shape}, observation {y.shape}")
    if x.size == 0:
        raise ParameterError("sequences must have at least one letter")
    mu = params.rho * x + params.lam
    terms = y * np.log(mu) - mu - gammaln(y + 1)
    return math.fsum(terms.tolist())


def sequence_pmf(params: ChannelParams, x: ArrayLike, y: ArrayLike) -> float:
    return math.exp(sequence_log_pmf(params, x, y))


def _cdf_table(mu: float) -> np.ndarray:
    top = int(math.ceil(mu + TAIL_SIGMAS * math.sqrt(mu))) + TAIL_PAD
    k = np.arange(top + 1)
    pmf = np.exp(k * math.log(mu) - mu - gammaln(k + 1))
    return np.cumsum(pmf)


def _invert(mu: float, uniforms: np.ndarray) -> np.ndarray:
    # smallest k with cdf(k) > u, i.e. a sequential search over the cdf
    return np.searchsorted(_cdf_table(mu), uniforms, side="right").astype(np.int64)


def sample_block(
    params: ChannelParams, x: ArrayLike, trials: int, generator: np.random.Generator
) -> np.ndarray:
    """
    Draw ``trials`` independent channel outputs for input x.

    Parameters
    ----------
    params : ChannelParams
        The channel.
    x : ArrayLike
        The transmitted codeword (length n).
    trials : int
        Number of independent uses of the whole codeword.
    generator : np.random.Generator
        Source of randomness; consumed in a fixed order.

    Returns
    -------
    np.ndarray
        An int64 array of shape (trials, n).
    """
    mu = mean_counts(params, x)
    n = mu.shape[0]
    counts = np.empty((trials, n), dtype=np.int64)
    if n == 0 or trials == 0:
        return counts
    uniforms = generator.random((trials, n))
    large = mu > INVERSION_LIMIT
    for t in range(n):
        if not large[t]:
            counts[:, t] = _invert(float(mu[t]), uniforms[:, t])
    if np.any(large):
        logger.debug(f"{int(large.sum())} letters above inversion limit, using PTRS")
        counts[:, large] = generator.poisson(mu[large], size=(trials, int(large.sum())))
    return counts


def sample(params: ChannelParams, x: ArrayLike, stream: RandomStream) -> Observation:
    """
    Draw one observation vector for codeword x from a seeded stream.

    Identical seeds and inputs give identical observations.
    """
    return sample_block(params, x, 1, stream.generator())[0]
