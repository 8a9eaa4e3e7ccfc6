"""
The threshold identification decoder.

To answer "was message j sent?" the receiver evaluates the decoding metric

    D(y; u) = (1/n) * sum_t [ (y_t - (rho u_t + lam))^2 - (rho u_t + lam) ]

and accepts when |D(y; u_j)| <= delta_n. The subtracted mean is the Poisson
variance, so D has zero expectation when u was actually sent. The comparison is
inclusive; ties do occur with integer counts.

Every evaluation checks the lower bound D >= -(1/n) * sum_t mu_t, which holds for
any real y because each squared term is non-negative.

Classes:
    DecodingVerdict, MetricBoundViolation.

Functions:
    decoding_metric, decoding_metric_batch, identify, identify_batch,
    type1_event, type2_event.
"""

import math

from dataclasses import dataclass

import numpy as np

from dataclasses_json import dataclass_json

from di_poisson.core.channel import ChannelParams, mean_counts
from di_poisson.core.codebook import Codebook
from di_poisson.core.domain import ArrayLike, MessageIndex, ParameterError

# relative slack for the lower-bound check
BOUND_TOLERANCE = 1e-9


class MetricBoundViolation(ArithmeticError):
    """The decoding metric fell below -(1/n) * sum of the letter means."""


@dataclass_json
@dataclass(frozen=True)
class DecodingVerdict:
    metric_value: float
    threshold: float
    accepted: bool


def _check_floor(value, mu: np.ndarray) -> None:
    floor = -float(mu.mean())
    if np.any(value < floor - BOUND_TOLERANCE * max(1.0, abs(floor))):
        raise MetricBoundViolation(f"metric {np.min(value)} below its floor {floor}")


def decoding_metric(y: ArrayLike, u: ArrayLike, params: ChannelParams) -> float:
    """
    Evaluate D(y; u) for a single observation.

    ``y`` need not be integral for the metric itself. The sum is accumulated with
    ``math.fsum``.

    Raises
    ------
    ParameterError
        On a length mismatch or empty input.
    """
    y = np.asarray(y, dtype=np.float64)
    mu = mean_counts(params, u)
    if y.shape != mu.shape or y.ndim != 1:
        raise ParameterError(f"length mismatch: observation {y.shape}, codeword {mu.shape}")
    if y.size == 0:
        raise ParameterError("sequences must have at least one letter")
    terms = (y - mu) ** 2 - mu
    value = math.fsum(terms.tolist()) / y.size
    _check_floor(value, mu)
    return value


def decoding_metric_batch(
    observations: np.ndarray, u: ArrayLike, params: ChannelParams
) -> np.ndarray:
    """D(y; u) for every row of a (trials, n) observation matrix."""
    mu = mean_counts(params, u)
    observations = np.asarray(observations)
    if observations.ndim != 2 or observations.shape[1] != mu.shape[0]:
        raise ParameterError(
            f"length mismatch: observations {observations.shape}, codeword {mu.shape}"
        )
    if mu.size == 0:
        raise ParameterError("sequences must have at least one letter")
    deviation = observations - mu
    values = np.mean(deviation * deviation - mu, axis=1)
    _check_floor(values, mu)
    return values


def identify(
    y: ArrayLike, u: ArrayLike, delta_n: float, params: ChannelParams
) -> DecodingVerdict:
    """Accept y as evidence for codeword u iff |D(y; u)| <= delta_n."""
    if not delta_n > 0:
        raise ParameterError(f"threshold must be positive, got {delta_n}")
    value = decoding_metric(y, u, params)
    return DecodingVerdict(metric_value=value, threshold=delta_n, accepted=abs(value) <= delta_n)


def identify_batch(
    observations: np.ndarray, u: ArrayLike, delta_n: float, params: ChannelParams
) -> np.ndarray:
    """Boolean acceptance vector for every row of ``observations``."""
    if not delta_n > 0:
        raise ParameterError(f"threshold must be positive, got {delta_n}")
    return np.abs(decoding_metric_batch(observations, u, params)) <= delta_n


def type1_event(
    i: MessageIndex, codebook: Codebook, y: ArrayLike, params: ChannelParams
) -> bool:
    """True iff y (received after sending u_i) falls outside the decoding set of i."""
    u = codebook.codeword(i)
    return not identify(y, u, codebook.params.delta_n, params).accepted


def type2_event(
    i: MessageIndex, j: MessageIndex, codebook: Codebook, y: ArrayLike, params: ChannelParams
) -> bool:
    """
    True iff y (received after sending u_i) falls inside the decoding set of j.

    For i == j this is the complement of ``type1_event`` on the same draw.
    """
    codebook.codeword(i)
    u = codebook.codeword(j)
    return identify(y, u, codebook.params.delta_n, params).accepted
