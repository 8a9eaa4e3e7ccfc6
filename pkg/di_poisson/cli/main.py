"""
Command-line interface for DI codes over the discrete-time Poisson channel.

Subcommands:
    generate  Build a codebook by rejection sampling and write it as JSON.
    simulate  Estimate type I / type II error rates over a range of n; writes
              report.csv and report.json into an existing output directory.
    bounds    Evaluate the analytic error and rate bounds over a range of n.
    verify    Re-check a stored codebook and report the ratio-separation property.

Every command resolves its parameters the same way: built-in defaults, then the
JSON file given with --config, then the long-form flags. DI_POISSON_SEED (or a
.env file holding it) supplies the seed when neither the file nor --seed does.

Exit codes:
    0  success
    1  the codebook failed validation
    2  I/O or configuration error
    3  codebook generation stalled, or the minimum distance is infeasible
"""

import json
import logging

from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional

import typer

from tabulate import tabulate
from termcolor import colored

from di_poisson.cli.config import RunConfig, load_run_config
from di_poisson.core import rng
from di_poisson.core.analysis import bounds_report, rate_bracket_onset
from di_poisson.core.codebook import (
    Codebook,
    GenerationStalled,
    InfeasibleDistance,
    generate as generate_codebook,
    ratio_separation_ok,
    verify as verify_codebook,
)
from di_poisson.core.rng import RandomStream
from di_poisson.core.simulation import sweep
from di_poisson.data.file_repository import FileRepository

logger = logging.getLogger(__name__)

app = typer.Typer(help="Deterministic identification over the discrete-time Poisson channel.")

EXIT_INVALID = 1
EXIT_CONFIG = 2
EXIT_STALLED = 3

REPORT_CSV = "report.csv"
REPORT_JSON = "report.json"
CHANNEL_KEYS = ("p_ch", "t_rls", "lambda")

CONFIG_OPTION = typer.Option(None, "--config", help="JSON file with run parameters.")
N_OPTION = typer.Option(None, "--n", help="Codeword length (first length of a sweep).")
RATE_OPTION = typer.Option(None, "--rate", help="Rate R in bits per n log2 n channel uses.")
SEED_OPTION = typer.Option(None, "--seed", help="Global 64-bit seed.")
A_OPTION = typer.Option(None, "--a", help="Precision scale of the decoding threshold.")
B_OPTION = typer.Option(None, "--b", help="Precision exponent, in (0, 1).")
C_OPTION = typer.Option(None, "--c", help="Threshold factor, in (0, 2).")
A_DIST_OPTION = typer.Option(None, "--a-dist", help="Precision scale of the minimum distance.")
P_AVE_OPTION = typer.Option(None, "--p-ave", help="Average power constraint.")
P_MAX_OPTION = typer.Option(None, "--p-max", help="Peak power constraint.")
P_CH_OPTION = typer.Option(None, "--p-ch", help="Molecule capture probability, in (0, 1].")
T_RLS_OPTION = typer.Option(None, "--t-rls", help="Release interval in seconds.")
LAMBDA_OPTION = typer.Option(None, "--lambda", help="Dark current (interference) rate.")
VERBOSE_OPTION = typer.Option(False, "--verbose", "-v")


def _fail(message: str, code: int) -> None:
    typer.echo(colored(message, "red"), err=True)
    raise typer.Exit(code)


@contextmanager
def exit_codes() -> Iterator[None]:
    """Translate domain and I/O errors into the documented exit codes."""
    try:
        yield
    except (GenerationStalled, InfeasibleDistance) as e:
        _fail(str(e), EXIT_STALLED)
    except (OSError, ValueError, KeyError, OverflowError) as e:
        _fail(f"{type(e).__name__}: {e}", EXIT_CONFIG)


def _resolve(
    config_path: Optional[Path], base: Optional[Dict[str, Any]] = None, **flags: Any
) -> RunConfig:
    overrides: Dict[str, Any] = dict(flags)
    if "lam" in overrides:
        overrides["lambda"] = overrides.pop("lam")
    return load_run_config(config_path, overrides, base)


def _repository_for(path: Path) -> FileRepository:
    return FileRepository(path.parent, create=False)


@app.command()
def generate(
    output: Path = typer.Option(..., "--output", "-o", help="Codebook JSON file to write."),
    config: Optional[Path] = CONFIG_OPTION,
    n: Optional[int] = N_OPTION,
    rate: Optional[float] = RATE_OPTION,
    seed: Optional[int] = SEED_OPTION,
    a: Optional[float] = A_OPTION,
    b: Optional[float] = B_OPTION,
    c: Optional[float] = C_OPTION,
    a_dist: Optional[float] = A_DIST_OPTION,
    p_ave: Optional[float] = P_AVE_OPTION,
    p_max: Optional[float] = P_MAX_OPTION,
    p_ch: Optional[float] = P_CH_OPTION,
    t_rls: Optional[float] = T_RLS_OPTION,
    lam: Optional[float] = LAMBDA_OPTION,
    max_rejections: Optional[int] = typer.Option(
        None, "--max-rejections", help="Consecutive rejections before giving up."
    ),
    verbose: bool = VERBOSE_OPTION,
):
    """Generate one codebook; the same seed always writes the same file."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO)
    with exit_codes():
        run = _resolve(
            config,
            n=n,
            rate=rate,
            seed=seed,
            a=a,
            b=b,
            c=c,
            a_dist=a_dist,
            p_ave=p_ave,
            p_max=p_max,
            p_ch=p_ch,
            t_rls=t_rls,
            lam=lam,
            max_rejections=max_rejections,
        )
        params = run.code()
        repository = _repository_for(output)
        # same stream the simulator uses for the first codebook at this n
        stream = RandomStream.from_seed(run.seed).child(params.n, 0).child(rng.CODEBOOK)
        codebook = generate_codebook(params, stream, run.max_rejections)

        document = codebook.to_dict()
        document["config"] = run.to_dict()
        repository[output.name] = json.dumps(document, indent=1)
        typer.echo(f"wrote {codebook.size} codewords of length {codebook.n} to {output}")


@app.command()
def simulate(
    output_dir: Path = typer.Option(
        Path("."), "--output-dir", "-o", help="Existing directory for report.csv / report.json."
    ),
    config: Optional[Path] = CONFIG_OPTION,
    n: Optional[int] = N_OPTION,
    n_max: Optional[int] = typer.Option(None, "--n-max", help="Last length of the sweep."),
    rate: Optional[float] = RATE_OPTION,
    seed: Optional[int] = SEED_OPTION,
    trials: Optional[int] = typer.Option(None, "--trials", help="Monte Carlo trials per n."),
    a: Optional[float] = A_OPTION,
    b: Optional[float] = B_OPTION,
    c: Optional[float] = C_OPTION,
    a_dist: Optional[float] = A_DIST_OPTION,
    p_ave: Optional[float] = P_AVE_OPTION,
    p_max: Optional[float] = P_MAX_OPTION,
    p_ch: Optional[float] = P_CH_OPTION,
    t_rls: Optional[float] = T_RLS_OPTION,
    lam: Optional[float] = LAMBDA_OPTION,
    sender: Optional[int] = typer.Option(None, "--sender", help="Transmitted message (1-based)."),
    pairs: Optional[int] = typer.Option(
        None, "--pairs", help="Sample this many type II targets instead of all of them."
    ),
    repeats: Optional[int] = typer.Option(None, "--repeats", help="Codebooks per length."),
    workers: Optional[int] = typer.Option(
        None, "--workers", help="Worker threads (default: all cores); never changes results."
    ),
    verbose: bool = VERBOSE_OPTION,
):
    """Estimate empirical type I and type II error rates for every n in the range."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO)
    with exit_codes():
        run = _resolve(
            config,
            n=n,
            n_max=n_max,
            rate=rate,
            seed=seed,
            trials=trials,
            a=a,
            b=b,
            c=c,
            a_dist=a_dist,
            p_ave=p_ave,
            p_max=p_max,
            p_ch=p_ch,
            t_rls=t_rls,
            lam=lam,
            sender=sender,
            pairs=pairs,
            repeats=repeats,
            workers=workers,
        )
        repository = FileRepository(output_dir, create=False)
        n_values = run.n_values()
        run.check_sender()
        sweep_log = sweep(n_values, run.simulation(), echo=run.to_dict())

        repository[REPORT_CSV] = sweep_log.format_log()
        repository[REPORT_JSON] = sweep_log.to_json()

        rows = [
            [r.n, r.size, r.empirical_type1, r.empirical_type2_avg, r.empirical_type2_max]
            for r in sweep_log.log()
        ]
        typer.echo(
            tabulate(
                rows,
                ["n", "L", "type I", "type II avg", "type II max"],
                tablefmt="pipe",
                floatfmt=".4g",
            )
        )
        if sweep_log.failures:
            failed = ", ".join(str(k) for k in sorted(sweep_log.failures))
            _fail(f"no report for n = {failed}", EXIT_STALLED)


@app.command()
def bounds(
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="JSON file to write."),
    config: Optional[Path] = CONFIG_OPTION,
    n: Optional[int] = N_OPTION,
    n_max: Optional[int] = typer.Option(None, "--n-max", help="Last length of the range."),
    rate: Optional[float] = RATE_OPTION,
    a: Optional[float] = A_OPTION,
    b: Optional[float] = B_OPTION,
    c: Optional[float] = C_OPTION,
    a_dist: Optional[float] = A_DIST_OPTION,
    p_ave: Optional[float] = P_AVE_OPTION,
    p_max: Optional[float] = P_MAX_OPTION,
    p_ch: Optional[float] = P_CH_OPTION,
    t_rls: Optional[float] = T_RLS_OPTION,
    lam: Optional[float] = LAMBDA_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Evaluate the analytic bounds (unclamped) for every n in the range."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO)
    with exit_codes():
        run = _resolve(
            config,
            n=n,
            n_max=n_max,
            rate=rate,
            a=a,
            b=b,
            c=c,
            a_dist=a_dist,
            p_ave=p_ave,
            p_max=p_max,
            p_ch=p_ch,
            t_rls=t_rls,
            lam=lam,
        )
        repository = _repository_for(output) if output is not None else None
        channel = run.channel()
        n_values = run.n_values()
        reports = [bounds_report(channel, run.code(k)) for k in n_values]
        first = run.code()
        onset = rate_bracket_onset(
            n_values, first.amplitude, first.a, first.b, first.p_max, channel.lam, channel.rho
        )

        typer.echo(
            tabulate(
                [
                    [r.n, r.type1_bound, r.type2_bound, r.rate_lower, r.rate_upper]
                    for r in reports
                ],
                ["n", "type I bound", "type II bound", "rate lower", "rate upper"],
                tablefmt="pipe",
                floatfmt=".4g",
            )
        )
        typer.echo(f"rate bracket onset: {onset}")
        if repository is not None:
            repository[output.name] = json.dumps(
                {
                    "config": run.to_dict(),
                    "reports": [r.to_dict() for r in reports],
                    "rate_bracket_onset": onset,
                },
                indent=2,
            )


@app.command()
def verify(
    codebook_file: Path = typer.Argument(..., help="Codebook JSON written by 'generate'."),
    non_separated: Optional[Path] = typer.Option(
        None, "--output", "-o", help="Write the pairs failing ratio separation to this JSON file."
    ),
    config: Optional[Path] = CONFIG_OPTION,
    p_ch: Optional[float] = P_CH_OPTION,
    t_rls: Optional[float] = T_RLS_OPTION,
    lam: Optional[float] = LAMBDA_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """
    Re-check every codebook invariant; exit 0 only when none is violated.

    The ratio-separation property is reported alongside but does not affect the
    exit code. It uses the channel stored with the codebook unless --config or the
    channel flags say otherwise.
    """
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO)
    with exit_codes():
        document = json.loads(_repository_for(codebook_file)[codebook_file.name])
        if not isinstance(document, dict):
            raise ValueError(f"{codebook_file} does not hold a codebook object")
        embedded = document.get("config") or {}
        # the channel defaults to the one the codebook was generated for
        base = {key: embedded[key] for key in CHANNEL_KEYS if key in embedded}
        run = _resolve(config, base, p_ch=p_ch, t_rls=t_rls, lam=lam)
        codebook = Codebook.from_dict(document, validate=False)
        report = verify_codebook(codebook)

        channel = run.channel()
        separation = ratio_separation_ok(codebook, channel.rho, channel.lam, codebook.params.b)
        summary = separation.summary()
        typer.echo(tabulate(sorted(summary.items()), ["ratio separation", ""], tablefmt="pipe"))

        if non_separated is not None:
            pairs: List[List[int]] = [list(pair) for pair in separation.violations()]
            _repository_for(non_separated)[non_separated.name] = json.dumps(
                {"eps_prime": separation.eps_prime, "pairs": pairs}
            )

    if not report.ok:
        for violation in report.violations:
            typer.echo(colored(violation.describe(), "red"), err=True)
        raise typer.Exit(EXIT_INVALID)
    typer.echo(f"{codebook_file}: {codebook.size} codewords, all constraints hold")


if __name__ == "__main__":
    app()
