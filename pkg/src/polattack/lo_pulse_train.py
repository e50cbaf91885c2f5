"""LO pulse train, measure-and-feedback polarization compensation, and Eve's
search for the reference pulses.

Bob measures the orientation of ``M`` reference pulses in every cycle of
``N`` pulses. The mean of those measurements becomes the correction applied
to every pulse of the *next* cycle. Pulses outside the reference set are never
looked at, which is the loophole the attack exploits.

Angles are kept unwrapped in :class:`PulseTrain`; residuals are wrapped to
``(-pi/2, pi/2]`` since orientation is defined modulo pi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable

import numpy as np

from . import _kernels
from .core_model import DRIFT_STREAM, chunk_rng
from .errors import ConfigError, DomainError, IdentificationError

DRIFT_MODES = ("worst-case-linear", "random-walk")
PLACEMENTS = ("first", "spread")


@dataclass(frozen=True)
class PulsePolarization:
    orientation_angle: float
    elliptic_angle: float = 0.0

    def __post_init__(self):
        if self.elliptic_angle != 0.0:
            raise DomainError("only linear polarization (elliptic angle 0) is modeled")
        if not -math.pi / 2 < self.orientation_angle <= math.pi / 2:
            raise DomainError("orientation angle must lie in (-pi/2, pi/2]")


@dataclass(frozen=True)
class CompensationConfig:
    cycle_length: int = 16
    reference_count: int = 1
    drift_threshold: float = 1e-5
    drift_rate: float = 34.0
    repetition_rate: float = 5e6
    drift_mode: str = "worst-case-linear"
    placement: str = "first"
    reference_positions: tuple | None = None
    initial_angle: float = 0.0

    def __post_init__(self):
        if self.cycle_length < 1:
            raise ConfigError("cycle length must be >= 1")
        if not 1 <= self.reference_count <= self.cycle_length:
            raise ConfigError(
                f"reference count must satisfy 1 <= M <= N, got M={self.reference_count}, N={self.cycle_length}"
            )
        if not self.drift_threshold > 0:
            raise ConfigError("drift threshold must be > 0")
        if not self.repetition_rate > 0:
            raise ConfigError("repetition rate must be > 0")
        if self.drift_rate < 0:
            raise ConfigError("drift rate must be >= 0")
        if self.drift_mode not in DRIFT_MODES:
            raise ConfigError(f"drift mode must be one of {DRIFT_MODES}")
        if self.placement not in PLACEMENTS:
            raise ConfigError(f"placement must be one of {PLACEMENTS}")
        if self.reference_positions is not None:
            raw = [int(p) for p in self.reference_positions]
            pos = tuple(sorted(set(raw)))
            if len(pos) != len(raw) or len(pos) != self.reference_count or pos[0] < 0 or pos[-1] >= self.cycle_length:
                raise ConfigError("reference positions must be M distinct indices in [0, N)")
            object.__setattr__(self, "reference_positions", pos)

    @property
    def drift_per_pulse(self) -> float:
        return self.drift_rate / self.repetition_rate

    @property
    def pmr(self) -> float:
        return self.reference_count / self.cycle_length

    def reference_indices(self) -> np.ndarray:
        """Positions of the reference pulses inside one cycle."""
        if self.reference_positions is not None:
            return np.array(self.reference_positions, dtype=np.int64)
        if self.placement == "first":
            return np.arange(self.reference_count, dtype=np.int64)
        return (np.arange(self.reference_count) * self.cycle_length) // self.reference_count


@dataclass
class PulseTrain:
    theta: np.ndarray
    reference_mask: np.ndarray
    cycle_length: int

    def __post_init__(self):
        self.theta = np.ascontiguousarray(self.theta, dtype=np.float64)
        self.reference_mask = np.ascontiguousarray(self.reference_mask, dtype=np.bool_)
        if self.theta.shape != self.reference_mask.shape:
            raise DomainError("angle and reference-mask arrays differ in length")

    def __len__(self):
        return self.theta.shape[0]

    @property
    def n_cycles(self) -> int:
        return -(-len(self) // self.cycle_length)

    def pulse(self, i: int) -> PulsePolarization:
        return PulsePolarization(float(wrap_orientation(self.theta[i])))

    def reference_set(self, cycle: int = 0) -> set:
        lo = cycle * self.cycle_length
        return set(np.flatnonzero(self.reference_mask[lo:lo + self.cycle_length]).tolist())


def wrap_orientation(theta):
    """Map angles onto (-pi/2, pi/2]."""
    theta = np.asarray(theta, dtype=np.float64)
    inside = (theta > -np.pi / 2) & (theta <= np.pi / 2)
    w = np.where(inside, theta, np.pi / 2 - np.mod(np.pi / 2 - theta, np.pi))
    return w if np.ndim(w) else float(w)


def required_compensation_rate(drift_rate: float, threshold: float) -> float:
    """Correction rate (Hz) that keeps accumulated drift below ``threshold``."""
    if not drift_rate > 0 or not threshold > 0:
        raise DomainError("drift rate and threshold must both be > 0")
    return drift_rate / threshold


def simulate_drift(n_pulses: int, config: CompensationConfig, seed: int = 0) -> np.ndarray:
    if n_pulses < 1:
        raise DomainError("need at least one pulse")
    step = config.drift_per_pulse
    if config.drift_mode == "worst-case-linear":
        return config.initial_angle + step * np.arange(n_pulses, dtype=np.float64)
    steps = chunk_rng(seed, DRIFT_STREAM, 0).standard_normal(n_pulses - 1) * step
    return config.initial_angle + np.concatenate(([0.0], np.cumsum(steps)))


def reference_mask(n_pulses: int, config: CompensationConfig) -> np.ndarray:
    mask = np.zeros(n_pulses, dtype=np.bool_)
    idx = config.reference_indices()
    for start in range(0, n_pulses, config.cycle_length):
        sel = start + idx
        mask[sel[sel < n_pulses]] = True
    return mask


def make_train(n_cycles: int, config: CompensationConfig, seed: int = 0) -> PulseTrain:
    n = n_cycles * config.cycle_length
    return PulseTrain(simulate_drift(n, config, seed), reference_mask(n, config), config.cycle_length)


def _run_loop(train: PulseTrain, config: CompensationConfig):
    if train.cycle_length != config.cycle_length:
        raise ConfigError("train and config disagree on the cycle length")
    if len(train) < config.cycle_length:
        raise DomainError("the train must cover at least one full cycle")
    n_full = len(train) // config.cycle_length
    per_cycle = train.reference_mask[: n_full * config.cycle_length].reshape(n_full, -1).sum(axis=1)
    if (per_cycle == 0).any():
        bad = int(np.flatnonzero(per_cycle == 0)[0])
        raise ConfigError(f"cycle {bad} has no reference pulses to drive the feedback")
    residual, corrections = _kernels.compensate(train.theta, train.reference_mask, config.cycle_length)
    return residual, corrections


def cycle_corrections(train: PulseTrain, config: CompensationConfig) -> np.ndarray:
    """Correction applied during each cycle (zero for the first one)."""
    return _run_loop(train, config)[1]


def compensate(train: PulseTrain, config: CompensationConfig):
    """Run the feedback loop.

    Returns the compensated train (post-correction angles) and the wrapped
    per-pulse residuals.
    """
    residual, _ = _run_loop(train, config)
    residual = wrap_orientation(residual)
    return replace(train, theta=residual.copy()), residual


def inject_attack(train: PulseTrain, config: CompensationConfig, attack_angle: float,
                  start_cycle: int = 0) -> PulseTrain:
    """Eve's modulation of the unmeasured pulses.

    Eve sees the same reference pulses Bob does, so she can predict the
    correction of every cycle and pre-rotate each unmeasured pulse to land at
    ``attack_angle`` after compensation. Reference pulses are left alone.
    """
    corrections = cycle_corrections(train, config)
    cycle_of = np.arange(len(train)) // config.cycle_length
    hit = ~train.reference_mask & (cycle_of >= start_cycle)
    theta = train.theta.copy()
    theta[hit] = corrections[cycle_of[hit]] + attack_angle
    return replace(train, theta=theta)


def make_probe_oracle(train: PulseTrain, config: CompensationConfig, probe_cycle: int = 1,
                      kick: float = 1e-3) -> Callable[[Iterable[int]], bool]:
    """Eve's test: does rotating pulses ``S`` of one cycle move Bob's feedback?

    The returned callable perturbs in-cycle indices ``S`` of ``probe_cycle`` by
    ``kick`` and reports whether the correction applied in the following
    cycle changed. Only reference pulses feed the controller, so the answer is
    positive exactly when ``S`` contains one.
    """
    if train.n_cycles < probe_cycle + 2:
        raise DomainError("the train needs a full cycle after the probed one")
    base = cycle_corrections(train, config)[probe_cycle + 1]
    offset = probe_cycle * config.cycle_length
    threshold = 0.5 * kick / config.cycle_length

    def probe(subset):
        idx = np.fromiter((int(i) for i in subset), dtype=np.int64)
        if idx.size == 0:
            return False
        if idx.min() < 0 or idx.max() >= config.cycle_length:
            raise DomainError("probe indices must lie inside one cycle")
        theta = train.theta.copy()
        theta[offset + idx] += kick
        moved = cycle_corrections(replace(train, theta=theta), config)[probe_cycle + 1]
        return abs(moved - base) > threshold

    return probe


def identify_reference_pulses(probe_oracle: Callable[[list], bool], n: int,
                              m: int | None = None) -> set:
    """Recover the reference positions with adaptive group testing.

    Each round confirms that the remaining candidates still hold a reference
    pulse and then halves its way down to one of them, which costs at most
    ``1 + ceil(log2 n)`` probes per reference. When ``m`` is given and the
    candidates left are exactly the references still missing, a single probe
    confirms them all (so ``m == n`` costs one probe).
    """
    if n < 1:
        raise DomainError("cycle length must be >= 1")
    if m is not None and not 1 <= m <= n:
        raise IdentificationError(f"declared reference count {m} is impossible for N={n}")
    found: list[int] = []
    candidates = list(range(n))
    while True:
        if m is not None:
            missing = m - len(found)
            if missing == 0:
                break
            if len(candidates) == missing:
                if not probe_oracle(candidates):
                    raise IdentificationError("oracle denies the only remaining candidates")
                found.extend(candidates)
                break
        if not candidates or not probe_oracle(candidates):
            if m is None and found:
                break
            raise IdentificationError(
                f"oracle reports no reference pulse among the remaining {len(candidates)} candidates"
            )
        group = candidates
        while len(group) > 1:
            half = group[: len(group) // 2]
            group = half if probe_oracle(half) else group[len(group) // 2:]
        found.append(group[0])
        candidates.remove(group[0])
    return set(found)


def probe_bound(n: int, m: int) -> int:
    return 2 * m * math.ceil(math.log2(n)) + m if n > 1 else m
