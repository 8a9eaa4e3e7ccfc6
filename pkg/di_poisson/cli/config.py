"""
Run configuration for the command-line interface.

A run is described by a single flat ``RunConfig``. Values are resolved in three
layers: the built-in defaults (the reference simulation setup: A = 1000,
p_ch = 0.01, T_rls = 1 s, lambda = 0.2, R = 0.1, a = 1e5, b = 0.99, c = 1/3,
a_dist = 10, 7e5 trials), then an optional JSON config file, then explicit
command-line flags. When neither the file nor a flag sets the seed, the
DI_POISSON_SEED environment variable is used (a ``.env`` file is honoured).

Classes:
    RunConfig: All primitives of a run; every derived quantity is recomputed from it.

Functions:
    load_env_if_needed() -> None
    load_run_config(config_path, overrides, base) -> RunConfig
"""

import json
import os

from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

from dataclasses_json import config, dataclass_json
from dotenv import load_dotenv

from di_poisson.core.channel import ChannelParams
from di_poisson.core.codebook import (
    DEFAULT_A_DIST,
    DEFAULT_MAX_REJECTIONS,
    CodeParams,
    codebook_size,
    derive_params,
)
from di_poisson.core.simulation import DEFAULT_TRIALS, PairPolicy, SimulationConfig

SEED_ENV = "DI_POISSON_SEED"


def _require_int(name: str, value: Any) -> None:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{name} must be an integer, got {value!r}")


def _require_number(name: str, value: Any) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{name} must be a number, got {value!r}")


@dataclass_json
@dataclass
class RunConfig:
    n: int = 19
    n_max: Optional[int] = None
    rate: float = 0.1
    p_ave: float = 1000.0
    p_max: float = 1000.0
    a: float = 1e5
    b: float = 0.99
    c: float = 1.0 / 3.0
    a_dist: Optional[float] = DEFAULT_A_DIST
    p_ch: float = 0.01
    t_rls: float = 1.0
    lam: float = field(default=0.2, metadata=config(field_name="lambda"))
    seed: int = 0
    trials: int = DEFAULT_TRIALS
    sender: int = 1
    pairs: Optional[int] = None
    repeats: int = 1
    workers: Optional[int] = None
    max_rejections: int = DEFAULT_MAX_REJECTIONS

    def __post_init__(self):
        for name in ("n", "seed", "trials", "sender", "repeats", "max_rejections"):
            _require_int(name, getattr(self, name))
        for name in ("n_max", "pairs", "workers"):
            if getattr(self, name) is not None:
                _require_int(name, getattr(self, name))
        for name in ("rate", "p_ave", "p_max", "a", "b", "c", "p_ch", "t_rls", "lam"):
            _require_number(name, getattr(self, name))
        if self.a_dist is not None:
            _require_number("a_dist", self.a_dist)

        for name in ("n", "trials", "sender", "repeats", "max_rejections"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("pairs", "workers"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValueError(f"{name} must be >= 1, got {value}")
        if self.n_max is not None and self.n_max < self.n:
            raise ValueError(f"n_max={self.n_max} is smaller than n={self.n}")

    def n_values(self) -> List[int]:
        last = self.n if self.n_max is None else self.n_max
        return list(range(self.n, last + 1))

    def check_sender(self) -> None:
        """Raise ValueError unless the sender exists in the codebook of every swept n."""
        for k in self.n_values():
            size = codebook_size(k, self.rate)
            if self.sender > size:
                raise ValueError(
                    f"sender {self.sender} exceeds the codebook size L={size} at n={k}"
                )

    def resolved_workers(self) -> int:
        return self.workers or os.cpu_count() or 1

    def channel(self) -> ChannelParams:
        return ChannelParams.from_release(self.p_ch, self.t_rls, self.lam)

    def code(self, n: Optional[int] = None) -> CodeParams:
        return derive_params(
            self.n if n is None else n,
            self.rate,
            self.p_ave,
            self.p_max,
            self.a,
            self.b,
            self.c,
            self.channel().rho,
            a_dist=self.a_dist,
        )

    def simulation(self, n: Optional[int] = None) -> SimulationConfig:
        return SimulationConfig(
            code=self.code(n),
            channel=self.channel(),
            trials=self.trials,
            sender_index=self.sender,
            pair_policy=(
                PairPolicy.ALL_PAIRS_FIXED_SENDER
                if self.pairs is None
                else PairPolicy.SAMPLED_PAIRS
            ),
            pairs=self.pairs,
            seed=self.seed,
            workers=self.resolved_workers(),
            repeats=self.repeats,
            max_rejections=self.max_rejections,
        )


def _json_keys() -> Dict[str, str]:
    keys = {}
    for f in fields(RunConfig):
        override = f.metadata.get("dataclasses_json", {}).get("letter_case")
        keys[override(f.name) if override else f.name] = f.name
    return keys


def load_env_if_needed() -> None:
    if os.getenv(SEED_ENV) is None:
        load_dotenv()
    if os.getenv(SEED_ENV) is None:
        # fall back to a .env in the current working directory
        load_dotenv(dotenv_path=os.path.join(os.getcwd(), ".env"))


def load_run_config(
    config_path: Optional[Path] = None,
    overrides: Optional[Dict[str, Any]] = None,
    base: Optional[Dict[str, Any]] = None,
) -> RunConfig:
    """
    Resolve the run configuration: defaults < base < JSON file < flags.

    Parameters
    ----------
    config_path : Optional[Path]
        A JSON document whose keys are RunConfig fields ("lambda" for lam).
    overrides : Optional[Dict[str, Any]]
        Flag values keyed like the JSON document; None entries are ignored.
    base : Optional[Dict[str, Any]]
        Values that replace the defaults but yield to the file and the flags, such as
        the configuration embedded in a codebook file.

    Returns
    -------
    RunConfig
        The merged configuration.

    Raises
    ------
    ValueError
        For unknown keys, malformed JSON or an unparsable DI_POISSON_SEED.
    OSError
        If the config file cannot be read.
    """
    merged = RunConfig().to_dict()
    merged.update(base or {})
    from_file: Dict[str, Any] = {}
    if config_path is not None:
        from_file = json.loads(Path(config_path).read_text(encoding="utf-8"))
        if not isinstance(from_file, dict):
            raise ValueError("config file must hold a JSON object")
        unknown = set(from_file) - set(_json_keys())
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        merged.update(from_file)

    flags = {key: value for key, value in (overrides or {}).items() if value is not None}
    merged.update(flags)

    if "seed" not in from_file and "seed" not in flags:
        load_env_if_needed()
        env_seed = os.getenv(SEED_ENV)
        if env_seed is not None:
            try:
                merged["seed"] = int(env_seed)
            except ValueError:
                raise ValueError(f"{SEED_ENV}={env_seed!r} is not an integer")

    return RunConfig.from_dict(merged)
