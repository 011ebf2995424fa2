"""Flat key = value pipeline configuration.

One file drives every command; all randomness flows from the single seed,
expanded into named substreams so stages are independently reproducible.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class PipelineConfig:
    # paths
    tracking_csv: str = "tracking.csv"
    metadata_csv: str = "metadata.csv"
    sidecar_csv: str = "truth.csv"
    model_dir: str = "models"
    out_dir: str = "out"
    geometry_file: str = ""  # optional; defaults to regulation court
    # global
    seed: int = 0
    split_fraction: float = 0.2
    timestamp: bool = True
    # synthetic corpus
    synth_n: int = 2000
    synth_noise_sd: float = 0.02
    synth_rate_hz: float = 50.0
    synth_volley_fraction: float = 0.12
    synth_restitution: float = 0.75
    # mixture fitting
    truncation: int = 20
    fit_max_iter: int = 600
    fit_tol: float = 1e-8
    fit_restarts: int = 3
    fit_jitter: float = 1e-6
    # outcome fitting
    outcome_knots: int = 8
    # Monte Carlo
    mc_samples: int = 1000

    def __post_init__(self):
        if not 0.0 < self.split_fraction <= 0.5:
            raise ConfigError(
                f"split_fraction must be in (0, 0.5], got {self.split_fraction}"
            )
        if self.mc_samples < 1:
            raise ConfigError("mc_samples must be >= 1")

    def path(self, name):
        return Path(getattr(self, name))


_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def load_config(path):
    """Parse a flat config file; unknown keys are errors (typo safety)."""
    spec = {f.name: f.type for f in fields(PipelineConfig)}
    defaults = PipelineConfig()
    values = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in spec:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            current = getattr(defaults, key)
            try:
                if isinstance(current, bool):
                    values[key] = _BOOL[value.lower()]
                elif isinstance(current, int):
                    values[key] = int(value)
                elif isinstance(current, float):
                    values[key] = float(value)
                else:
                    values[key] = value
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return PipelineConfig(**values)


def substream(seed, *labels):
    """Deterministic named RNG substream of the global seed."""
    keys = [zlib.crc32(str(l).encode("utf-8")) for l in labels]
    return np.random.default_rng([int(seed)] + keys)


def substream_seed(seed, *labels):
    """The entropy list for a named substream (for APIs that take seeds)."""
    return [int(seed)] + [zlib.crc32(str(l).encode("utf-8")) for l in labels]
