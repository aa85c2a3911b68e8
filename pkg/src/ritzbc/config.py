"""Experiment configuration: INI-style file -> validated, resolved ``ExperimentConfig``.

Example::

    [experiment]
    problem = disk
    preset = desk
    strategies = naive, pretrain
    lambdas = 1, 100, 10000
    repetitions = 5
    base_seed = 0

Keys left out fall back to the preset. ``paper`` uses the lattice constant of
the domain (160 disk/annulus, 500 square), full schedules, 25 repetitions and
10^6 error samples; ``desk`` uses N=40, quarter-length schedules, 5
repetitions and 10^5 error samples.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .geom import DISTANCE_IDS
from .problems import PROBLEM_KINDS
from .strategies import DEFAULT_N, STRATEGIES, StrategyConfig, exactbc_config, naive_config, pretrain_config, \
    scaled

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "PRESETS", "DEFAULT_LAMBDAS"]

DEFAULT_LAMBDAS = (1.0, 5.0, 10.0, 50.0, 100.0, 500.0, 1000.0, 5000.0, 10000.0)

PRESETS = {
    "paper": {"lattice_n": None, "iteration_factor": 1.0, "repetitions": 25, "error_samples": 10**6,
              "energy_interior": 10**6},
    "desk": {"lattice_n": 40, "iteration_factor": 0.25, "repetitions": 5, "error_samples": 10**5,
             "energy_interior": 10**5},
}

_KEYS = {
    "problem", "preset", "strategies", "lambdas", "lambda_p", "distances", "repetitions", "lattice_n",
    "error_samples", "error_seed", "base_seed", "output", "monitor_every", "energy_interior",
    "energy_boundary", "iteration_factor",
}


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    preset: str = "paper"
    strategies: tuple[str, ...] = ("naive",)
    lambdas: tuple[float, ...] = DEFAULT_LAMBDAS
    lambda_p: float = 1.0
    distances: tuple[str, ...] = ()
    repetitions: int = 25
    lattice_n: int = 160
    iteration_factor: float = 1.0
    error_samples: int = 10**6
    error_seed: int = 20210
    base_seed: int = 0
    monitor_every: int = 0
    energy_interior: int = 10**6
    energy_boundary: int = 10**4
    output: str = "results"
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("extra")
        return d

    @property
    def config_hash(self) -> str:
        """Hash of everything that affects results (the output directory does not)."""
        d = self.to_dict()
        d.pop("output")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def settings(self, strategy: str):
        """Sweep values for one strategy: λ list, or distance ids for exact BCs."""
        return self.distances if strategy == "exactbc" else self.lambdas

    def jobs(self) -> list[tuple[int, StrategyConfig]]:
        """All runs in (strategy, setting, repetition) order; seed = base_seed + index."""
        out = []
        i = 0
        for strategy in self.strategies:
            for setting in self.settings(strategy):
                for _ in range(self.repetitions):
                    out.append((i, self.strategy_config(strategy, setting, self.base_seed + i)))
                    i += 1
        return out

    def strategy_config(self, strategy: str, setting, seed: int) -> StrategyConfig:
        common = dict(
            lattice_n=self.lattice_n, seed=seed, monitor_every=self.monitor_every,
            energy_interior=self.energy_interior, energy_boundary=self.energy_boundary,
        )
        if strategy == "naive":
            cfg = naive_config(self.problem, setting, **common)
        elif strategy == "pretrain":
            cfg = pretrain_config(self.problem, setting, lam_p=self.lambda_p, **common)
        else:
            cfg = exactbc_config(self.problem, setting, **common)
        return scaled(cfg, self.iteration_factor) if self.iteration_factor != 1.0 else cfg


def _floats(field, text):
    try:
        vals = tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise ConfigError(field, f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise ConfigError(field, "must not be empty")
    return vals


def _words(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _int(field, text, minimum=None):
    try:
        v = int(text)
    except ValueError:
        raise ConfigError(field, f"expected an integer, got {text!r}") from None
    if minimum is not None and v < minimum:
        raise ConfigError(field, f"must be >= {minimum}")
    return v


def parse_config(text: str, preset: str | None = None, output: str | None = None) -> ExperimentConfig:
    """Parse and validate config text; ``preset``/``output`` override the file."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("file", str(exc)) from None
    if not cp.has_section("experiment"):
        raise ConfigError("experiment", "missing [experiment] section")
    raw = dict(cp["experiment"])
    unknown = set(raw) - _KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")

    if "problem" not in raw:
        raise ConfigError("problem", "required")
    problem = raw["problem"].strip()
    if problem not in PROBLEM_KINDS:
        raise ConfigError("problem", f"unknown problem {problem!r}; expected one of {PROBLEM_KINDS}")

    preset = preset or raw.get("preset", "paper").strip()
    if preset not in PRESETS:
        raise ConfigError("preset", f"unknown preset {preset!r}; expected paper or desk")
    base = PRESETS[preset]

    strategies = _words(raw.get("strategies", "naive"))
    if not strategies:
        raise ConfigError("strategies", "must not be empty")
    for s in strategies:
        if s not in STRATEGIES:
            raise ConfigError("strategies", f"unknown strategy {s!r}; expected one of {STRATEGIES}")

    lambdas = _floats("lambdas", raw["lambdas"]) if "lambdas" in raw else DEFAULT_LAMBDAS
    if any(not lam > 0 for lam in lambdas):
        raise ConfigError("lambdas", "all penalization strengths must be > 0")
    lambda_p = _floats("lambda_p", raw["lambda_p"])[0] if "lambda_p" in raw else 1.0
    if not lambda_p > 0:
        raise ConfigError("lambda_p", "must be > 0")

    if "distances" in raw:
        distances = _words(raw["distances"])
    else:
        distances = tuple(d for d in DISTANCE_IDS if d.startswith(problem + "_"))
    for d in distances:
        if d not in DISTANCE_IDS or not d.startswith(problem + "_"):
            raise ConfigError("distances", f"{d!r} is not a distance function for the {problem}")
    if "exactbc" in strategies and not distances:
        raise ConfigError("distances", "must not be empty for exactbc")

    repetitions = _int("repetitions", raw["repetitions"], 1) if "repetitions" in raw else base["repetitions"]
    if "lattice_n" in raw:
        lattice_n = _int("lattice_n", raw["lattice_n"], 2)
    else:
        lattice_n = base["lattice_n"] or DEFAULT_N[problem]
    factor = _floats("iteration_factor", raw["iteration_factor"])[0] if "iteration_factor" in raw \
        else base["iteration_factor"]
    if not 0 < factor:
        raise ConfigError("iteration_factor", "must be > 0")
    error_samples = _int("error_samples", raw["error_samples"], 1) if "error_samples" in raw \
        else base["error_samples"]
    energy_interior = _int("energy_interior", raw["energy_interior"], 1) if "energy_interior" in raw \
        else base["energy_interior"]

    return ExperimentConfig(
        problem=problem,
        preset=preset,
        strategies=strategies,
        lambdas=lambdas,
        lambda_p=lambda_p,
        distances=distances,
        repetitions=repetitions,
        lattice_n=lattice_n,
        iteration_factor=factor,
        error_samples=error_samples,
        error_seed=_int("error_seed", raw.get("error_seed", "20210")),
        base_seed=_int("base_seed", raw.get("base_seed", "0")),
        monitor_every=_int("monitor_every", raw.get("monitor_every", "0"), 0),
        energy_interior=energy_interior,
        energy_boundary=_int("energy_boundary", raw.get("energy_boundary", "10000"), 1),
        output=output or raw.get("output", "results").strip(),
    )


def load_config(path, preset=None, output=None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", str(exc)) from None
    return parse_config(text, preset=preset, output=output)
