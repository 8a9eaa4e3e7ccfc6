"""
Records of simulated error rates and the sweep log that collects them.

Classes:
    ErrorRateReport: Empirical type I / type II rates for one codeword length.
    SweepLog: Ordered collection of reports plus the lengths that failed, with a
        CSV rendering (one row per n, header row first).
"""

import json
import logging

from dataclasses import dataclass, field
from typing import Dict, List, Optional

from dataclasses_json import dataclass_json

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["n", "L", "type1", "type1_stderr", "type2_avg", "type2_max", "trials", "seed"]


@dataclass_json
@dataclass
class ErrorRateReport:
    """
    Empirical error rates measured at one codeword length.

    Rates are plain frequencies (no smoothing, no clamping); the type II fields
    are None when the codebook has a single codeword.
    """

    n: int
    size: int
    empirical_type1: float
    type1_errors: int
    std_error_type1: float
    empirical_type2_avg: Optional[float]
    empirical_type2_max: Optional[float]
    type2_targets: int
    type2_trials_per_target: int
    trials_used: int
    seed: int
    repeats: int
    pair_policy: str
    config_echo: Dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("empirical_type1", "empirical_type2_avg", "empirical_type2_max"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} is not a probability")
        if self.empirical_type2_max is not None and (
            self.empirical_type2_max < self.empirical_type2_avg
        ):
            raise ValueError("maximum type II rate below the average")


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.6g}"


class SweepLog:
    """
    Reports gathered over a sweep of codeword lengths.
    """

    def __init__(self):
        self._log: List[ErrorRateReport] = []
        self.failures: Dict[int, str] = {}

    def update_log(self, report: ErrorRateReport) -> None:
        self._log.append(report)

    def record_failure(self, n: int, reason: str) -> None:
        logger.warning(f"n={n}: {reason}")
        self.failures[n] = reason

    def log(self) -> List[ErrorRateReport]:
        """
        Get the reports in sweep order.

        Returns
        -------
        List[ErrorRateReport]
            One report per successfully simulated codeword length.
        """
        return self._log

    def __len__(self) -> int:
        return len(self._log)

    def format_log(self) -> str:
        """
        Format the reports as CSV.

        Returns
        -------
        str
            Header row followed by one row per n; rates use 6 significant digits.
        """
        result = ",".join(CSV_COLUMNS) + "\n"
        for r in self._log:
            result += (
                f"{r.n},{r.size},{_fmt(r.empirical_type1)},{_fmt(r.std_error_type1)},"
                f"{_fmt(r.empirical_type2_avg)},{_fmt(r.empirical_type2_max)},"
                f"{r.trials_used},{r.seed}\n"
            )
        return result

    def to_json(self) -> str:
        return json.dumps(
            {
                "reports": [r.to_dict() for r in self._log],
                "failures": {str(n): reason for n, reason in self.failures.items()},
            },
            indent=2,
        )
