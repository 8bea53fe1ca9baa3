"""Flat key = value experiment configuration."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

RESERVED = ("experiment", "n_traj", "seed", "out_dir", "threads")


class ConfigError(ValueError):
    pass


@dataclass(slots=True)
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    n_traj: int = 0
    seed: int = 1
    out_dir: Path = Path("runs")
    threads: int = 1

    def resolved(self) -> dict:
        return {"experiment": self.experiment, "n_traj": self.n_traj, "seed": self.seed,
                "threads": self.threads, "params": dict(sorted(self.params.items()))}


def parse_flat(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment; blank lines are skipped."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = val
    return out


def coerce(value: str, default):
    """Convert a string to the type of ``default``."""
    if isinstance(default, bool):
        low = value.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"not a boolean: {value!r}")
    if isinstance(default, int):
        try:
            return int(float(value)) if float(value).is_integer() else _bad(value, "an integer")
        except ValueError:
            _bad(value, "an integer")
    if isinstance(default, float):
        low = value.lower()
        if low in ("inf", "+inf", "infinity"):
            return math.inf
        try:
            return float(value)
        except ValueError:
            _bad(value, "a number")
    if isinstance(default, tuple):
        items = [s.strip() for s in value.split(",") if s.strip()]
        proto = default[0] if default else 0.0
        return tuple(coerce(s, proto) for s in items)
    return value


def _bad(value, what):
    raise ConfigError(f"{value!r} is not {what}")


def build_config(experiment: str, defaults: dict, overrides: dict[str, str], n_traj: int | None,
                 seed: int | None, out_dir: str | None, threads: int | None) -> ExperimentConfig:
    """Merge defaults with string overrides; unknown keys are rejected."""
    params = dict(defaults["params"])
    base = {"n_traj": defaults["n_traj"], "seed": 1}
    for key, val in overrides.items():
        if key == "experiment":
            if val != experiment:
                raise ConfigError(f"config names experiment {val!r}, command asked for {experiment!r}")
            continue
        if key in ("n_traj", "seed", "threads"):
            base[key] = coerce(val, 0)
            continue
        if key == "out_dir":
            out_dir = out_dir or val
            continue
        if key not in params:
            raise ConfigError(f"unknown key {key!r} for {experiment}; valid keys: {', '.join(sorted(params))}")
        params[key] = coerce(val, params[key])
    if n_traj is not None:
        base["n_traj"] = n_traj
    if seed is not None:
        base["seed"] = seed
    if threads is None:
        threads = int(base.get("threads", 0)) or (os.cpu_count() or 1)
    root = Path(out_dir or os.environ.get("QTRAJ_OUT", "runs"))
    return ExperimentConfig(experiment, params, int(base["n_traj"]), int(base["seed"]), root, int(threads))


def load_config_file(path: str | os.PathLike) -> dict[str, str]:
    return parse_flat(Path(path).read_text(encoding="utf-8"))
