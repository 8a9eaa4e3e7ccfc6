"""
Monte Carlo estimation of empirical type I and type II error rates.

The transmitter sends message ``sender_index`` (1 by default). For the type I rate
its own codeword is sent ``trials`` times and every rejection by the threshold
decoder counts as an error. For the type II rate each target j != i gets its own
batch of draws from the sender's codeword, and every acceptance of j counts; the
per-target frequencies give the average and the maximum type II rate.

Randomness is keyed, never positional: type I blocks are keyed by
(n, repeat, block), type II draws by (n, repeat, target, block), so results are
bit-identical for every worker count. Trials are processed in fixed blocks of
BLOCK_SIZE and aggregated with integer counters.

Classes:
- PairPolicy: How type II targets are chosen.
- SimulationConfig: Code, channel and Monte Carlo settings.
- Type1Estimate, Type2Estimate: Results of the two estimators.

Functions:
- estimate_type1, estimate_type2: The two estimators for one codebook.
- simulate_length: Build ``repeats`` codebooks for one n and aggregate a report.
- sweep: ``simulate_length`` over a range of n, collecting failures per n.
"""

import dataclasses
import logging
import math

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from dataclasses_json import dataclass_json

from di_poisson.core import rng
from di_poisson.core.channel import ChannelParams, sample_block
from di_poisson.core.codebook import (
    DEFAULT_MAX_REJECTIONS,
    Codebook,
    CodeParams,
    GenerationStalled,
    derive_params,
    generate,
)
from di_poisson.core.decoder import identify_batch
from di_poisson.core.domain import ParameterError
from di_poisson.core.report import ErrorRateReport, SweepLog
from di_poisson.core.rng import RandomStream

logger = logging.getLogger(__name__)

DEFAULT_TRIALS = 700_000
BLOCK_SIZE = 8192

T = TypeVar("T")


class PairPolicy(str, Enum):
    ALL_PAIRS_FIXED_SENDER = "all-pairs-fixed-sender"
    SAMPLED_PAIRS = "sampled-pairs"


@dataclass_json
@dataclass
class SimulationConfig:
    """
    Settings for one simulated codeword length.

    Attributes
    ----------
    code : CodeParams
        Codebook parameters (for ``sweep`` only the primitives are used).
    channel : ChannelParams
        The channel.
    trials : int
        Draws for the type I estimate; the type II draws are split evenly over
        the targets (rounded up).
    sender_index : int
        The transmitted message (1-based).
    pair_policy : PairPolicy
        All targets, or ``pairs`` targets sampled without replacement.
    pairs : Optional[int]
        Number of targets under SAMPLED_PAIRS.
    seed : int
        Global 64-bit seed.
    workers : int
        Threads used for trial blocks and targets; never changes the result.
    repeats : int
        Codebook realizations per n.
    delta_override : Optional[float]
        Replaces the derived threshold delta_n when set.
    max_rejections : int
        Consecutive-rejection budget of the codebook generator.
    """

    code: CodeParams
    channel: ChannelParams
    trials: int = DEFAULT_TRIALS
    sender_index: int = 1
    pair_policy: PairPolicy = PairPolicy.ALL_PAIRS_FIXED_SENDER
    pairs: Optional[int] = None
    seed: int = 0
    workers: int = 1
    repeats: int = 1
    delta_override: Optional[float] = None
    max_rejections: int = DEFAULT_MAX_REJECTIONS

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")
        if self.repeats < 1:
            raise ParameterError(f"repeats must be >= 1, got {self.repeats}")
        if self.workers < 1:
            raise ParameterError(f"workers must be >= 1, got {self.workers}")
        if self.pair_policy == PairPolicy.SAMPLED_PAIRS and not (self.pairs or 0) >= 1:
            raise ParameterError("sampled-pairs policy needs pairs >= 1")

    @property
    def threshold(self) -> float:
        return self.code.delta_n if self.delta_override is None else self.delta_override


@dataclass
class Type1Estimate:
    rate: float
    std_error: float
    errors: int
    trials: int


@dataclass
class Type2Estimate:
    average: float
    maximum: float
    trials_per_target: int
    per_target: Dict[int, float] = field(default_factory=dict)

    @property
    def targets(self) -> int:
        return len(self.per_target)


def _run(workers: int, task: Callable[..., T], items: Sequence) -> List[T]:
    if workers <= 1 or len(items) <= 1:
        return [task(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, items))


def _blocks(trials: int) -> List[Tuple[int, int]]:
    return [
        (index, min(BLOCK_SIZE, trials - start))
        for index, start in enumerate(range(0, trials, BLOCK_SIZE))
    ]


def _check_sender(config: SimulationConfig, codebook: Codebook) -> None:
    if not 1 <= config.sender_index <= codebook.size:
        raise ParameterError(
            f"sender index {config.sender_index} outside [1, {codebook.size}]"
        )


def length_stream(config: SimulationConfig, n: int, repeat: int = 0) -> RandomStream:
    """The stream owning every draw made for (n, repeat) under this seed."""
    return RandomStream.from_seed(config.seed).child(n, repeat)


def estimate_type1(
    config: SimulationConfig, codebook: Codebook, stream: RandomStream
) -> Type1Estimate:
    """
    Fraction of trials in which the sent codeword is rejected by its own test.

    Returns
    -------
    Type1Estimate
        Rate, standard error sqrt(p (1 - p) / trials) and the raw counts.
    """
    _check_sender(config, codebook)
    u = codebook.codeword(config.sender_index)
    base = stream.child(rng.TYPE1)
    threshold = config.threshold

    def count_block(block: Tuple[int, int]) -> int:
        index, size = block
        observations = sample_block(config.channel, u, size, base.child(index).generator())
        accepted = identify_batch(observations, u, threshold, config.channel)
        return int(size - np.count_nonzero(accepted))

    errors = sum(_run(config.workers, count_block, _blocks(config.trials)))
    rate = errors / config.trials
    return Type1Estimate(
        rate=rate,
        std_error=math.sqrt(rate * (1.0 - rate) / config.trials),
        errors=errors,
        trials=config.trials,
    )


def _targets(config: SimulationConfig, codebook: Codebook, stream: RandomStream) -> List[int]:
    others = [j for j in range(1, codebook.size + 1) if j != config.sender_index]
    if config.pair_policy == PairPolicy.ALL_PAIRS_FIXED_SENDER:
        return others
    k = min(config.pairs, len(others))
    chosen = stream.child(rng.PAIR_SELECTION).generator().choice(
        len(others), size=k, replace=False
    )
    return sorted(others[i] for i in chosen)


def estimate_type2(
    config: SimulationConfig, codebook: Codebook, stream: RandomStream
) -> Type2Estimate:
    """
    Per-target false identification rates for the configured sender.

    Each target j gets ceil(trials / targets) fresh draws of the sender's codeword;
    the estimate reports the mean and the maximum of the per-target frequencies.

    Raises
    ------
    ParameterError
        If the codebook has fewer than two codewords.
    """
    if codebook.size < 2:
        raise ParameterError("type II rates need at least two codewords")
    _check_sender(config, codebook)
    u = codebook.codeword(config.sender_index)
    targets = _targets(config, codebook, stream)
    per_target = math.ceil(config.trials / len(targets))
    base = stream.child(rng.TYPE2)
    threshold = config.threshold
    blocks = _blocks(per_target)

    def count_target(j: int) -> int:
        target = codebook.codeword(j)
        hits = 0
        for index, size in blocks:
            generator = base.child(j, index).generator()
            observations = sample_block(config.channel, u, size, generator)
            accepted = identify_batch(observations, target, threshold, config.channel)
            hits += int(np.count_nonzero(accepted))
        return hits

    counts = _run(config.workers, count_target, targets)
    rates = {j: hits / per_target for j, hits in zip(targets, counts)}
    # average from the integer counts so that it never rounds above the maximum
    return Type2Estimate(
        average=sum(counts) / (per_target * len(targets)),
        maximum=max(counts) / per_target,
        trials_per_target=per_target,
        per_target=rates,
    )


def simulate_length(
    config: SimulationConfig, echo: Optional[Dict] = None
) -> ErrorRateReport:
    """
    Simulate ``config.repeats`` codebooks of the configured length and aggregate.

    Type I counts are pooled over repeats; the type II average and maximum are the
    means of the per-codebook values.

    Raises
    ------
    GenerationStalled
        If any codebook cannot be built.
    """
    n = config.code.n
    errors = 0
    trials = 0
    averages: List[float] = []
    maxima: List[float] = []
    per_target = 0
    targets = 0
    for repeat in range(config.repeats):
        stream = length_stream(config, n, repeat)
        codebook = generate(config.code, stream.child(rng.CODEBOOK), config.max_rejections)
        type1 = estimate_type1(config, codebook, stream)
        errors += type1.errors
        trials += type1.trials
        if codebook.size >= 2:
            type2 = estimate_type2(config, codebook, stream)
            averages.append(type2.average)
            maxima.append(type2.maximum)
            per_target = type2.trials_per_target
            targets = type2.targets

    rate = errors / trials
    report = ErrorRateReport(
        n=n,
        size=config.code.size,
        empirical_type1=rate,
        type1_errors=errors,
        std_error_type1=math.sqrt(rate * (1.0 - rate) / trials),
        empirical_type2_avg=math.fsum(averages) / len(averages) if averages else None,
        empirical_type2_max=math.fsum(maxima) / len(maxima) if maxima else None,
        type2_targets=targets,
        type2_trials_per_target=per_target,
        trials_used=trials,
        seed=config.seed,
        repeats=config.repeats,
        pair_policy=config.pair_policy.value,
        config_echo=echo if echo is not None else config.to_dict(encode_json=True),
    )
    logger.info(
        f"n={n} L={report.size}: type I {report.empirical_type1:.4g}, "
        f"type II avg {report.empirical_type2_avg}, max {report.empirical_type2_max}"
    )
    return report


def config_for_length(template: SimulationConfig, n: int) -> SimulationConfig:
    """Re-derive the code parameters of ``template`` at codeword length n."""
    code = template.code
    params = derive_params(
        n,
        code.rate,
        code.p_ave,
        code.p_max,
        code.a,
        code.b,
        code.c,
        template.channel.rho,
        a_dist=code.a_dist,
    )
    return dataclasses.replace(template, code=params)


def sweep(
    n_values: Iterable[int], template: SimulationConfig, echo: Optional[Dict] = None
) -> SweepLog:
    """
    Run ``simulate_length`` for every n, regenerating the codebook per n.

    A length whose parameters are infeasible or whose generation stalls is
    recorded in ``SweepLog.failures`` and the sweep moves on.
    """
    sweep_log = SweepLog()
    for n in n_values:
        try:
            config = config_for_length(template, n)
            sweep_log.update_log(simulate_length(config, echo))
        except (GenerationStalled, ParameterError) as e:
            sweep_log.record_failure(n, str(e))
    return sweep_log
