"""
Closed-form analytics for DI codes over the DTPC.

All quantities are evaluated in the log domain with base-2 logarithms for sizes
and rates. Error bounds are reported unclamped: at short lengths they routinely
exceed 1. ``clamp_probability`` gives the plotting-friendly min(1, value), and
``reference_curve`` evaluates the fitted c / n^e - offset curves that are usually
drawn next to simulated error rates.

Key Features:
- Exact Poisson fourth moments by truncated summation, next to the polynomial
  bound 7 (mu^4 + mu^3 + mu^2 + mu).
- Type I and type II (E0 + E1) error bounds, plus the distance-dependent E0 bound
  for a concrete pair of codewords.
- Sphere volume, packing counts and the achievable / converse rate expressions,
  each with a Stirling form (o(n) terms dropped) and an exact log-gamma form.

Classes:
- BoundsReport: Everything ``bounds_report`` computes for one (channel, code).
"""

import logging
import math

from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np

from dataclasses_json import dataclass_json
from scipy.special import gammaln

from di_poisson.core.channel import ChannelParams
from di_poisson.core.codebook import CodeParams
from di_poisson.core.domain import ArrayLike, ParameterError

logger = logging.getLogger(__name__)

TAIL_TOLERANCE = 1e-14
# upper density bound exponent for sphere packings: Delta_n <= 2^{-0.599 n}
DENSITY_EXPONENT = 0.599

LOG2_E = math.log2(math.e)
LOG2_PI = math.log2(math.pi)

# (coefficient, exponent, offset) of the fitted curves c / n^e - offset
TYPE1_REFERENCE = (1.58, 0.99, 0.002)
TYPE2_REFERENCE = (0.115, 0.99, 0.0005)


@dataclass_json
@dataclass
class BoundsReport:
    n: int
    type1_bound: float
    e0_bound: float
    e1_bound: float
    type2_bound: float
    rate_lower: float
    rate_upper: float
    rate_lower_exact: float
    rate_upper_exact: float
    sphere_radius: float
    log2_sphere_volume: float
    log2_packing_count_lower: float


def _truncated_moment(mu: float, power: int, centre: float) -> float:
    if mu < 0:
        raise ParameterError(f"mean must be non-negative, got {mu}")
    if mu == 0:
        return 0.0
    log_mu = math.log(mu)
    terms = []
    k = 0
    while True:
        log_pmf = k * log_mu - mu - float(gammaln(k + 1))
        term = (k - centre) ** power * math.exp(log_pmf)
        terms.append(term)
        if k > mu and term < TAIL_TOLERANCE:
            break
        k += 1
    return math.fsum(terms)


def poisson_fourth_central_moment(mu: float) -> float:
    """E[(Z - mu)^4] for Z ~ Pois(mu), summed until the tail term drops below 1e-14."""
    return _truncated_moment(mu, 4, mu)


def poisson_fourth_raw_moment(mu: float) -> float:
    """E[Z^4] for Z ~ Pois(mu), by the same truncated summation."""
    return _truncated_moment(mu, 4, 0.0)


def fourth_moment_bound(mu: float) -> float:
    """The polynomial bound 7 (mu^4 + mu^3 + mu^2 + mu) on the fourth central moment."""
    return 7.0 * (mu**4 + mu**3 + mu**2 + mu)


def fourth_raw_moment_polynomial(mu: float) -> float:
    """
    mu^4 + 6 mu^3 + 7 mu^2 + mu.

    Often quoted as the fourth central moment; it is the fourth *raw* moment
    E[Z^4]. The central moment is 3 mu^2 + mu.
    """
    return mu**4 + 6 * mu**3 + 7 * mu**2 + mu


def _peak_mean(channel: ChannelParams, code: CodeParams) -> float:
    return channel.rho * code.amplitude + channel.lam


def type1_bound(channel: ChannelParams, code: CodeParams) -> float:
    """7 ((rho A + lam)^4 + ... + (rho A + lam)) / (c^2 rho^4 a^2 n^b)."""
    return fourth_moment_bound(_peak_mean(channel, code)) / (
        code.c**2 * channel.rho**4 * code.a**2 * code.n**code.b
    )


def type2_bounds(channel: ChannelParams, code: CodeParams) -> Tuple[float, float]:
    """
    Return (e0, e1), the bounds on the two events whose union covers a type II error.

    e0 = 16 (rho A + lam) A^2 / (c^2 rho^2 a^2 n^b)
    e1 = 7 ((rho A + lam)^4 + ... ) / (4 (c - 2)^2 rho^4 a^2 n^b)
    """
    if code.c == 2:
        raise ParameterError("c must differ from 2")
    peak = _peak_mean(channel, code)
    scale = code.a**2 * code.n**code.b
    e0 = 16.0 * peak * code.amplitude**2 / (code.c**2 * channel.rho**2 * scale)
    e1 = fourth_moment_bound(peak) / (4.0 * (code.c - 2.0) ** 2 * channel.rho**4 * scale)
    return e0, e1


def pairwise_e0_bound(
    channel: ChannelParams, code: CodeParams, u_i: ArrayLike, u_j: ArrayLike
) -> float:
    """The E0 bound 4 rho^2 (rho A + lam) ||u_i - u_j||^2 / (n^2 delta_n^2) for one pair."""
    diff = np.asarray(u_i, dtype=np.float64) - np.asarray(u_j, dtype=np.float64)
    squared = float(np.dot(diff, diff))
    return (
        4.0
        * channel.rho**2
        * _peak_mean(channel, code)
        * squared
        / (code.n**2 * code.delta_n**2)
    )


def clamp_probability(value: float) -> float:
    return min(1.0, value)


def reference_curve(
    n: float, coefficient: float, exponent: float = 0.99, offset: float = 0.0
) -> float:
    return coefficient / n**exponent - offset


def log2_sphere_volume(n: float, r: float) -> float:
    """
    log2 of the volume pi^{n/2} / Gamma(n/2 + 1) * r^n of an n-ball of radius r.
    """
    if n < 1 or not r > 0:
        raise ParameterError(f"need n >= 1 and r > 0, got n={n}, r={r}")
    return 0.5 * n * LOG2_PI - float(gammaln(0.5 * n + 1)) * LOG2_E + n * math.log2(r)


def log2_packing_count_lower(n: float, amplitude: float, r0: float) -> float:
    """log2 of 2^{-n} A^n / Vol(n, r0): spheres guaranteed by a saturated packing."""
    if not amplitude > 0:
        raise ParameterError(f"amplitude must be positive, got {amplitude}")
    return -n + n * math.log2(amplitude) - log2_sphere_volume(n, r0)


def log2_packing_count_upper(n: float, p_max: float, r0: float) -> float:
    """log2 of 2^{-0.599 n} P_max^n / Vol(n, r0): the most spheres any packing holds."""
    if not p_max > 0:
        raise ParameterError(f"P_max must be positive, got {p_max}")
    return -DENSITY_EXPONENT * n + n * math.log2(p_max) - log2_sphere_volume(n, r0)


def _scale(n: float) -> float:
    if n < 2:
        raise ParameterError(f"rates need n >= 2, got {n}")
    return n * math.log2(n)


def achievability_radius(n: float, a: float, b: float) -> float:
    """r0 = sqrt(n eps_n) = sqrt(a) n^{(1+b)/4}."""
    return math.sqrt(a) * n ** ((1.0 + b) / 4.0)


def converse_radius(n: float, p_max: float, lam: float, rho: float, b: float) -> float:
    """r0 = lam P_max / (2 rho n^{1+b})."""
    return lam * p_max / (2.0 * rho * n ** (1.0 + b))


def rate_lower_bound(n: float, amplitude: float, a: float, b: float) -> float:
    """
    [((1-b)/4) n log2 n + n log2(A / (e sqrt(a)))] / (n log2 n); o(n) terms dropped.
    """
    scale = _scale(n)
    return (
        (1.0 - b) / 4.0 * scale + n * math.log2(amplitude / (math.e * math.sqrt(a)))
    ) / scale


def rate_lower_bound_exact(n: float, amplitude: float, a: float, b: float) -> float:
    """The achievable rate with the log-gamma sphere volume instead of Stirling."""
    r0 = achievability_radius(n, a, b)
    return log2_packing_count_lower(n, amplitude, r0) / _scale(n)


def rate_upper_bound(n: float, p_max: float, lam: float, rho: float, b: float) -> float:
    """The converse rate expression with the o(n) terms dropped."""
    scale = _scale(n)
    r0 = converse_radius(n, p_max, lam, rho, b)
    total = (
        n * math.log2(p_max)
        - n * math.log2(r0)
        - 0.5 * n * LOG2_PI
        + 0.5 * n * math.log2(n / 2.0)
        - 0.5 * n * LOG2_E
        - DENSITY_EXPONENT * n
    )
    return total / scale


def rate_upper_bound_exact(n: float, p_max: float, lam: float, rho: float, b: float) -> float:
    r0 = converse_radius(n, p_max, lam, rho, b)
    return log2_packing_count_upper(n, p_max, r0) / _scale(n)


def volume_ratio_rate(n: float, amplitude: float, c_exp: float) -> float:
    """
    [(1/2 - c) n log2 n + n (log2(A / sqrt(pi e)) - 3/2)] / (n log2 n) for r0 = n^c.
    """
    if not 0 < c_exp < 0.5:
        raise ParameterError(f"radius exponent must lie in (0, 1/2), got {c_exp}")
    scale = _scale(n)
    constant = math.log2(amplitude / math.sqrt(math.pi * math.e)) - 1.5
    return ((0.5 - c_exp) * scale + n * constant) / scale


def volume_ratio_rate_exact(n: float, amplitude: float, c_exp: float) -> float:
    """[log2(A^n / Vol(n, n^c)) - n] / (n log2 n) with the exact ball volume."""
    if not 0 < c_exp < 0.5:
        raise ParameterError(f"radius exponent must lie in (0, 1/2), got {c_exp}")
    return log2_packing_count_lower(n, amplitude, n**c_exp) / _scale(n)


def rate_bracket_onset(
    n_grid: Iterable[int],
    amplitude: float,
    a: float,
    b: float,
    p_max: float,
    lam: float,
    rho: float,
) -> Optional[int]:
    """
    Smallest n of the grid from which rate_lower_bound < rate_upper_bound holds at
    every later grid point; None if it fails at the last one.
    """
    onset = None
    for n in sorted(n_grid):
        bracketed = rate_lower_bound(n, amplitude, a, b) < rate_upper_bound(
            n, p_max, lam, rho, b
        )
        if bracketed and onset is None:
            onset = n
        elif not bracketed:
            onset = None
    return onset


def bounds_report(channel: ChannelParams, code: CodeParams) -> BoundsReport:
    """Assemble every analytic quantity for one codeword length."""
    e0, e1 = type2_bounds(channel, code)
    r0 = math.sqrt(code.n * code.eps_n)
    n = code.n
    report = BoundsReport(
        n=n,
        type1_bound=type1_bound(channel, code),
        e0_bound=e0,
        e1_bound=e1,
        type2_bound=e0 + e1,
        rate_lower=rate_lower_bound(n, code.amplitude, code.a, code.b),
        rate_upper=rate_upper_bound(n, code.p_max, channel.lam, channel.rho, code.b),
        rate_lower_exact=rate_lower_bound_exact(n, code.amplitude, code.a, code.b),
        rate_upper_exact=rate_upper_bound_exact(
            n, code.p_max, channel.lam, channel.rho, code.b
        ),
        sphere_radius=r0,
        log2_sphere_volume=log2_sphere_volume(n, r0),
        log2_packing_count_lower=log2_packing_count_lower(n, code.amplitude, r0),
    )
    logger.debug(f"bounds for n={n}: {report}")
    return report
