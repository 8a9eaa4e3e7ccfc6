"""
Construction and validation of deterministic identification (DI) codebooks.

A DI codebook holds L = floor(2^{(n log2 n) R}) codewords in the cube [0, A]^n,
A = min(P_ave, P_max), kept at least d_min apart in Euclidean distance. Codewords
are drawn uniformly from the cube and accepted one at a time if they keep the
required distance to every codeword accepted before them; otherwise they are
discarded and redrawn.

Precision scales:
    The decoding precision eps_n = a * n^{-(1-b)/2} sets the threshold
    delta_n = c * rho^2 * eps_n. The minimum distance 2 * sqrt(n * eps'_n) uses a
    separate distance scale ``a_dist`` for eps'_n, because a single scale cannot
    give both the reference thresholds (a = 1e5) and the reference distances
    (a_dist = 10). Passing ``a_dist=None`` ties the distance to ``a``.

Key Features:
- Super-exponential codebook size law, evaluated in extended precision.
- Parameter derivation with range checks.
- Seeded rejection sampling with a consecutive-rejection budget.
- Exhaustive verification of peak, average and distance constraints.
- The ratio-separation map of the converse argument.
- JSON persistence with revalidation on load.

Classes:
- CodeParams, Codebook, Violation, ValidationReport, SeparationMap.
- GenerationStalled, InfeasibleDistance, CodebookSizeOverflow, CodebookInvalid.

Functions:
- codebook_size, precision, epsilon_prime, derive_params, generate, verify,
  pairwise_distances, min_distance, ratio_separation_ok.
"""

import json
import logging
import math

from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

import mpmath
import numpy as np

from dataclasses_json import dataclass_json

from di_poisson.core.domain import Codeword, MessageIndex, ParameterError
from di_poisson.core.rng import RandomStream

logger = logging.getLogger(__name__)

CODEBOOK_SIZE_MAX_BITS = 63
DEFAULT_MAX_REJECTIONS = 10**6
DEFAULT_A_DIST = 10.0


class InfeasibleDistance(ParameterError):
    """The minimum distance does not fit two codewords into the cube."""


class CodebookSizeOverflow(OverflowError):
    """The codebook size does not fit the supported integer width."""


class GenerationStalled(RuntimeError):
    """The rejection sampler ran out of consecutive attempts."""

    def __init__(self, accepted: int, wanted: int, budget: int, d_min: float):
        self.accepted = accepted
        self.wanted = wanted
        self.budget = budget
        self.d_min = d_min
        super().__init__(
            f"codebook generation stalled after {budget} consecutive rejections: "
            f"{accepted} of {wanted} codewords placed with minimum distance "
            f"d_min={d_min:g}"
        )


@dataclass_json
@dataclass
class CodeParams:
    """
    Everything needed to build and decode a DI codebook.

    Attributes
    ----------
    n : int
        Codeword length.
    rate : float
        Rate R in bits per n*log2(n) channel uses.
    p_ave, p_max : float
        Average and peak power constraints.
    amplitude : float
        A = min(p_ave, p_max).
    a, b, c : float
        Precision scale, precision exponent (0 < b < 1), threshold factor (0 < c < 2).
    a_dist : Optional[float]
        Distance precision scale; None means ``a`` is used.
    rho : float
        Channel capture factor used for the threshold.
    eps_n, delta_n, d_min : float
        Derived decoding precision, decoding threshold and minimum distance.
    size : int
        Number of codewords L.
    """

    n: int
    rate: float
    p_ave: float
    p_max: float
    amplitude: float
    a: float
    b: float
    c: float
    a_dist: Optional[float]
    rho: float
    eps_n: float
    delta_n: float
    d_min: float
    size: int

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"codeword length must be >= 1, got {self.n}")
        if self.size < 1:
            raise ParameterError(f"codebook size must be >= 1, got {self.size}")
        if not self.amplitude > 0:
            raise ParameterError(f"amplitude must be positive, got {self.amplitude}")


def codebook_size(n: int, rate: float) -> int:
    """
    Return L(n, R) = floor(2^{(n log2 n) R}).

    The exponent is evaluated with mpmath at 50 digits, so the floor does not
    depend on double rounding of log2(n).

    Raises
    ------
    ParameterError
        If n < 1 or rate <= 0.
    CodebookSizeOverflow
        If the exponent reaches CODEBOOK_SIZE_MAX_BITS.
    """
    if n < 1:
        raise ParameterError(f"codeword length must be >= 1, got {n}")
    if not rate > 0:
        raise ParameterError(f"rate must be positive, got {rate}")
    with mpmath.workdps(50):
        exponent = mpmath.mpf(n) * mpmath.log(n, 2) * mpmath.mpf(rate)
        if exponent >= CODEBOOK_SIZE_MAX_BITS:
            raise CodebookSizeOverflow(
                f"2^({float(exponent):.3f}) codewords exceed {CODEBOOK_SIZE_MAX_BITS} bits"
                f" (n={n}, R={rate})"
            )
        return max(1, int(mpmath.floor(mpmath.power(2, exponent))))


def precision(n: int, a: float, b: float) -> float:
    """eps_n = a * n^{-(1-b)/2}."""
    return a * n ** (-(1.0 - b) / 2.0)


def epsilon_prime(n: int, p_max: float, b: float) -> float:
    """The ratio-separation threshold P_max / n^{1+b}."""
    return p_max / n ** (1.0 + b)


def derive_params(
    n: int,
    rate: float,
    p_ave: float,
    p_max: float,
    a: float,
    b: float,
    c: float,
    rho: float,
    a_dist: Optional[float] = DEFAULT_A_DIST,
    size: Optional[int] = None,
) -> CodeParams:
    """
    Derive a fully populated CodeParams from the primitive parameters.

    Parameters
    ----------
    n, rate : int, float
        Codeword length and rate.
    p_ave, p_max : float
        Power constraints.
    a, b, c : float
        Precision scale, exponent and threshold factor.
    rho : float
        Channel capture factor.
    a_dist : Optional[float]
        Distance precision scale (None ties it to ``a``).
    size : Optional[int]
        Override for L; by default the super-exponential size law is used.

    Raises
    ------
    ParameterError
        For any parameter out of range, including d_min >= A * sqrt(n).
    """
    if not 0 < b < 1:
        raise ParameterError(f"b must lie in (0, 1), got {b}")
    if not 0 < c < 2:
        raise ParameterError(f"c must lie in (0, 2), got {c}")
    for name, value in (("P_ave", p_ave), ("P_max", p_max), ("a", a), ("rho", rho)):
        if not value > 0:
            raise ParameterError(f"{name} must be positive, got {value}")
    if a_dist is not None and not a_dist > 0:
        raise ParameterError(f"a_dist must be positive, got {a_dist}")

    amplitude = min(p_ave, p_max)
    eps_n = precision(n, a, b)
    delta_n = c * rho**2 * eps_n
    eps_dist = eps_n if a_dist is None else precision(n, a_dist, b)
    d_min = 2.0 * math.sqrt(n * eps_dist)
    if d_min >= amplitude * math.sqrt(n):
        raise InfeasibleDistance(
            f"minimum distance d_min={d_min:g} is not below the cube diagonal "
            f"A*sqrt(n)={amplitude * math.sqrt(n):g}; no two codewords fit"
        )
    return CodeParams(
        n=n,
        rate=rate,
        p_ave=p_ave,
        p_max=p_max,
        amplitude=amplitude,
        a=a,
        b=b,
        c=c,
        a_dist=a_dist,
        rho=rho,
        eps_n=eps_n,
        delta_n=delta_n,
        d_min=d_min,
        size=codebook_size(n, rate) if size is None else size,
    )


@dataclass
class Codebook:
    """
    L codewords of length n together with the parameters they were built for.

    Codewords are stored as a float64 array of shape (L, n); message i (1-based)
    is row i - 1.
    """

    params: CodeParams
    codewords: np.ndarray

    @property
    def size(self) -> int:
        return int(self.codewords.shape[0])

    @property
    def n(self) -> int:
        return int(self.codewords.shape[1])

    def codeword(self, i: MessageIndex) -> Codeword:
        """
        Return the codeword of message i.

        Raises
        ------
        IndexError
            If i is outside [1, L].
        """
        if not 1 <= i <= self.size:
            raise IndexError(f"message index {i} outside [1, {self.size}]")
        return self.codewords[i - 1]

    def means(self, rho: float, lam: float) -> np.ndarray:
        """Per-letter mean counts rho * u + lam for every codeword."""
        return rho * self.codewords + lam

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(), "codewords": self.codewords.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data: dict, validate: bool = True) -> "Codebook":
        params = CodeParams.from_dict(data["params"])
        codewords = np.asarray(data["codewords"], dtype=np.float64)
        if codewords.ndim != 2:
            codewords = codewords.reshape(len(data["codewords"]), -1)
        codebook = cls(params=params, codewords=codewords)
        if validate:
            report = verify(codebook)
            if not report.ok:
                raise CodebookInvalid(report)
        return codebook

    @classmethod
    def from_json(cls, text: str, validate: bool = True) -> "Codebook":
        """
        Load a codebook written by ``to_json``.

        Raises
        ------
        CodebookInvalid
            If ``validate`` is set and any codebook invariant is violated.
        """
        return cls.from_dict(json.loads(text), validate=validate)


@dataclass_json
@dataclass
class Violation:
    kind: str
    indices: List[int]
    value: float
    limit: float

    def describe(self) -> str:
        if not self.indices:
            return f"{self.kind} constraint violated: {self.value:g} vs {self.limit:g}"
        where = ", ".join(str(i) for i in self.indices)
        return f"{self.kind} constraint violated at ({where}): {self.value:g} vs {self.limit:g}"


@dataclass_json
@dataclass
class ValidationReport:
    """Violated codebook invariants; empty when the codebook is valid."""

    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __len__(self) -> int:
        return len(self.violations)

    def of_kind(self, kind: str) -> List[Violation]:
        return [v for v in self.violations if v.kind == kind]


class CodebookInvalid(ValueError):
    def __init__(self, report: ValidationReport):
        self.report = report
        first = report.violations[0].describe() if report.violations else ""
        super().__init__(f"codebook has {len(report)} violation(s); first: {first}")


def _accepts(params: CodeParams, candidate: np.ndarray, accepted: np.ndarray) -> bool:
    if candidate.mean() > params.p_ave:
        return False
    if accepted.shape[0] == 0:
        return True
    squared = np.sum((accepted - candidate) ** 2, axis=1)
    return bool(squared.min() >= params.d_min**2)


def generate(
    params: CodeParams,
    stream: RandomStream,
    max_rejections: int = DEFAULT_MAX_REJECTIONS,
) -> Codebook:
    """
    Build a codebook by minimum-distance rejection sampling.

    Each candidate has i.i.d. Uniform[0, A] letters. It is accepted if its average
    stays within P_ave and it lies at least d_min from every codeword accepted so
    far; otherwise it is discarded and a new candidate is drawn.

    Parameters
    ----------
    params : CodeParams
        Target parameters (size, length, amplitude, d_min).
    stream : RandomStream
        Seeded stream; the same stream always yields the same codebook.
    max_rejections : int
        Budget of consecutive rejections before giving up.

    Returns
    -------
    Codebook
        A codebook satisfying every invariant checked by ``verify``.

    Raises
    ------
    GenerationStalled
        If ``max_rejections`` candidates in a row are rejected.
    """
    generator = stream.generator()
    accepted = np.empty((params.size, params.n), dtype=np.float64)
    count = 0
    rejections = 0
    total_rejections = 0
    while count < params.size:
        candidate = generator.uniform(0.0, params.amplitude, size=params.n)
        if _accepts(params, candidate, accepted[:count]):
            accepted[count] = candidate
            count += 1
            rejections = 0
            continue
        rejections += 1
        total_rejections += 1
        if rejections >= max_rejections:
            raise GenerationStalled(count, params.size, max_rejections, params.d_min)

    logger.debug(
        f"generated {params.size} codewords of length {params.n} "
        f"({total_rejections} rejections)"
    )
    return Codebook(params=params, codewords=accepted)


def pairwise_distances(codebook: Codebook, i: MessageIndex) -> np.ndarray:
    """Euclidean distances from codeword i to every codeword (itself included)."""
    u = codebook.codeword(i)
    return np.sqrt(np.sum((codebook.codewords - u) ** 2, axis=1))


def min_distance(codebook: Codebook) -> float:
    """Smallest pairwise distance; infinite for a single codeword."""
    best = math.inf
    rows = codebook.codewords
    for row in range(rows.shape[0] - 1):
        squared = np.sum((rows[row + 1 :] - rows[row]) ** 2, axis=1)
        best = min(best, float(squared.min()))
    return math.sqrt(best)


def _parameter_violations(params: CodeParams) -> List[Violation]:
    violations = []
    if not 0 < params.b < 1:
        violations.append(Violation("params.b", [], params.b, 1.0))
    if not 0 < params.c < 2:
        violations.append(Violation("params.c", [], params.c, 2.0))
    if violations:
        return violations

    # derived fields must match a fresh derivation from the stored primitives
    eps_n = precision(params.n, params.a, params.b)
    eps_dist = eps_n if params.a_dist is None else precision(params.n, params.a_dist, params.b)
    expected = {
        "amplitude": min(params.p_ave, params.p_max),
        "eps_n": eps_n,
        "delta_n": params.c * params.rho**2 * eps_n,
        "d_min": 2.0 * math.sqrt(params.n * eps_dist),
    }
    for name, value in expected.items():
        stored = getattr(params, name)
        if not math.isclose(stored, value, rel_tol=1e-12):
            violations.append(Violation(f"params.{name}", [], stored, value))
    diagonal = min(params.p_ave, params.p_max) * math.sqrt(params.n)
    if params.d_min >= diagonal:
        violations.append(Violation("params.d_min", [], params.d_min, diagonal))
    return violations


def verify(codebook: Codebook) -> ValidationReport:
    """
    Check every codebook invariant exhaustively.

    Checks that the derived parameters (amplitude, eps_n, delta_n, d_min) match
    the stored primitives, the array shape against the parameters, the peak
    constraint 0 <= u_{i,t} <= min(P_ave, P_max), the average constraint
    mean_t u_{i,t} <= P_ave and the pairwise distance ||u_i - u_j|| >= d_min (an
    O(L^2 n) pass). Indices in the report are 1-based (message, letter).
    """
    params = codebook.params
    rows = codebook.codewords
    report = ValidationReport(_parameter_violations(params))

    if rows.ndim != 2 or rows.shape != (params.size, params.n):
        report.violations.append(
            Violation("shape", list(rows.shape), float(rows.size), float(params.size * params.n))
        )
        return report

    peak = min(params.p_ave, params.p_max)
    for i, t in zip(*np.nonzero((rows < 0) | (rows > peak))):
        value = float(rows[i, t])
        limit = 0.0 if value < 0 else peak
        report.violations.append(Violation("peak", [int(i) + 1, int(t) + 1], value, limit))

    averages = rows.mean(axis=1)
    for i in np.nonzero(averages > params.p_ave)[0]:
        report.violations.append(
            Violation("average", [int(i) + 1], float(averages[i]), params.p_ave)
        )

    limit = params.d_min**2
    for i in range(rows.shape[0] - 1):
        squared = np.sum((rows[i + 1 :] - rows[i]) ** 2, axis=1)
        for offset in np.nonzero(squared < limit)[0]:
            j = i + 1 + int(offset)
            report.violations.append(
                Violation(
                    "distance", [i + 1, j + 1], math.sqrt(float(squared[offset])), params.d_min
                )
            )
    return report


class SeparationMap(Mapping):
    """
    Ordered-pair map (i1, i2) -> bool of the ratio-separation property.

    A pair is separated when some letter t has
    |1 - (rho u_{i2,t} + lam) / (rho u_{i1,t} + lam)| > eps_prime.
    Entries are computed on demand, so the map stays cheap for large codebooks.
    """

    def __init__(self, means: np.ndarray, eps_prime: float):
        self._means = means
        self.eps_prime = eps_prime

    @property
    def size(self) -> int:
        return int(self._means.shape[0])

    def _row(self, i1: int) -> np.ndarray:
        base = self._means[i1 - 1]
        deviation = np.abs(1.0 - self._means / base)
        return np.any(deviation > self.eps_prime, axis=1)

    def __getitem__(self, pair: Tuple[int, int]) -> bool:
        i1, i2 = pair
        if i1 == i2 or not (1 <= i1 <= self.size and 1 <= i2 <= self.size):
            raise KeyError(pair)
        base = self._means[i1 - 1]
        other = self._means[i2 - 1]
        return bool(np.any(np.abs(1.0 - other / base) > self.eps_prime))

    def __iter__(self) -> Iterator[Tuple[int, int]]:
        for i1 in range(1, self.size + 1):
            for i2 in range(1, self.size + 1):
                if i1 != i2:
                    yield (i1, i2)

    def __len__(self) -> int:
        return self.size * (self.size - 1)

    def violations(self) -> Iterator[Tuple[int, int]]:
        """Pairs that are NOT separated."""
        for i1 in range(1, self.size + 1):
            row = self._row(i1)
            row[i1 - 1] = True
            for offset in np.nonzero(~row)[0]:
                yield (i1, int(offset) + 1)

    def summary(self) -> Dict[str, float]:
        failed = sum(1 for _ in self.violations())
        return {
            "eps_prime": self.eps_prime,
            "pairs": len(self),
            "separated": len(self) - failed,
            "not_separated": failed,
        }


def ratio_separation_ok(codebook: Codebook, rho: float, lam: float, b: float) -> SeparationMap:
    """
    Evaluate the ratio-separation property for every ordered pair of codewords.

    eps_prime = P_max / n^{1+b} with P_max taken from the codebook parameters.

    Raises
    ------
    ParameterError
        If b <= 0.
    """
    if not b > 0:
        raise ParameterError(f"b must be positive, got {b}")
    eps = epsilon_prime(codebook.n, codebook.params.p_max, b)
    return SeparationMap(codebook.means(rho, lam), eps)
