# Run the n = 19..28 sweep at the reference parameters and compare the measured
# error rates with the reference points and fitted curves.
import logging

from pathlib import Path
from typing import Dict, Optional, Tuple

from tabulate import tabulate
from typer import run

from di_poisson.cli.config import RunConfig
from di_poisson.core.analysis import TYPE1_REFERENCE, TYPE2_REFERENCE, reference_curve
from di_poisson.core.simulation import sweep
from di_poisson.data.file_repository import FileRepository

# n -> (type I, type II average, type II maximum) of the reference measurement
REFERENCE_POINTS: Dict[int, Tuple[float, float, float]] = {
    19: (0.0802, 0.0032, 0.0052),
    28: (0.0441, 0.00053471, 0.00084480),
}


def main(
    trials: int = 700_000,
    seed: int = 0,
    workers: Optional[int] = None,
    repeats: int = 1,
    output_dir: Optional[Path] = None,
):
    logging.basicConfig(level=logging.INFO)
    config = RunConfig(n=19, n_max=28, trials=trials, seed=seed, workers=workers, repeats=repeats)
    sweep_log = sweep(config.n_values(), config.simulation(), echo=config.to_dict())

    if output_dir is not None:
        repository = FileRepository(output_dir)
        repository["report.csv"] = sweep_log.format_log()
        repository["report.json"] = sweep_log.to_json()

    headers = [
        "n",
        "type I",
        "type I fit",
        "type II avg",
        "type II fit",
        "type II max",
        "reference (I, II avg, II max)",
    ]
    rows = []
    for report in sweep_log.log():
        rows.append(
            [
                report.n,
                report.empirical_type1,
                reference_curve(report.n, *TYPE1_REFERENCE),
                report.empirical_type2_avg,
                reference_curve(report.n, *TYPE2_REFERENCE),
                report.empirical_type2_max,
                REFERENCE_POINTS.get(report.n, ""),
            ]
        )
    print("\nError rates:\n")
    print(tabulate(rows, headers, tablefmt="pipe", floatfmt=".4g"))
    print()
    for n, reason in sweep_log.failures.items():
        print(f"n={n} failed: {reason}")


if __name__ == "__main__":
    run(main)
