"""Experiment configuration: flat ``key = value`` files with ``#`` comments.

Lists are comma separated. Numeric grids may also be written as
``start:stop:step`` (stop inclusive), e.g. ``distances_km = 0:60:1``.
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigError

_SECTION = "experiment"


def _grid(text):
    parts = [p.strip() for p in text.split(":")]
    if len(parts) != 3:
        raise ConfigError(f"grid must be start:stop:step, got {text!r}")
    start, stop, step = map(float, parts)
    if step <= 0:
        raise ConfigError("grid step must be > 0")
    count = int(round((stop - start) / step)) + 1
    return tuple(float(v) for v in np.round(start + step * np.arange(count), 12))


def parse_float_list(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    text = str(text).strip()
    if ":" in text:
        return _grid(text)
    return tuple(float(v) for v in text.split(",") if v.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    va: float = 19.0
    beta: float = 0.95
    pmr: float = 0.5
    pmr_list: tuple = (0.8, 0.6, 0.4)
    eps_target: float = 0.005
    loss_db_per_km: float = 0.2
    distances_km: tuple = tuple(float(d) for d in range(61))
    angles_deg: tuple = (0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0)
    samples: int = 1_000_000
    seed: int = 0
    workers: int = 1
    malus_convention: str = "paper"
    # pulse-train scenario
    cycle_length: int = 16
    reference_count: int = 8
    drift_rate: float = 34.0
    drift_threshold: float = 1e-5
    repetition_rate: float = 5e6
    drift_mode: str = "worst-case-linear"
    placement: str = "first"
    n_cycles: int = 8
    attack_angle_deg: float = 30.0
    attack_start_cycle: int = 2

    def __post_init__(self):
        d = np.asarray(self.distances_km)
        if d.size == 0 or np.any(np.diff(d) <= 0) or np.any(d < 0):
            raise ConfigError("distance grid must be non-negative and strictly increasing")
        a = np.asarray(self.angles_deg)
        if a.size == 0 or np.any(a < 0) or np.any(a > 90):
            raise ConfigError("angles must lie within [0, 90] degrees")
        if not self.va > 0 or not 0 < self.beta <= 1:
            raise ConfigError("need va > 0 and 0 < beta <= 1")
        for k in (self.pmr, *self.pmr_list):
            if not 0 <= k <= 1:
                raise ConfigError(f"PMR {k} outside [0, 1]")
        if self.malus_convention not in ("paper", "squared"):
            raise ConfigError("malus_convention must be 'paper' or 'squared'")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.samples < 1 or self.workers < 1:
            raise ConfigError("samples and workers must be >= 1")

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        try:
            return dataclasses.replace(self, **kw)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def _convert(field, raw):
    default = field.default
    try:
        if isinstance(default, tuple):
            return parse_float_list(raw)
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(float(raw)) if "e" in raw.lower() else int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"bad value for {field.name}: {raw!r}") from exc


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(comment_prefixes=("#",), inline_comment_prefixes=("#",),
                                       delimiters=("=",), interpolation=None)
    try:
        parser.read_string(f"[{_SECTION}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    known = {f.name: f for f in fields(ExperimentConfig)}
    values = {}
    for key, raw in parser[_SECTION].items():
        name = key.replace("-", "_")
        if name not in known:
            raise ConfigError(f"unknown config key {key!r}")
        values[name] = _convert(known[name], raw)
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
