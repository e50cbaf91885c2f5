"""Protocol data model and quadrature sample generation.

All quadratures are in shot-noise units. Random draws are produced in fixed
size chunks, each chunk seeded from ``(master_seed, stream, chunk_index)``,
so a batch is bit-identical no matter how many workers generate it.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DomainError, EmptyBatchError

CHUNK_SIZE = 1 << 16

# RNG stream identifiers
ALICE_STREAM = 0
NOISE_STREAM = 1
DRIFT_STREAM = 2


@dataclass(frozen=True)
class ProtocolParams:
    modulation_variance: float = 19.0
    reconciliation_efficiency: float = 0.95

    def __post_init__(self):
        if not self.modulation_variance > 0:
            raise DomainError(f"modulation variance must be > 0, got {self.modulation_variance}")
        if not 0 < self.reconciliation_efficiency <= 1:
            raise DomainError(
                f"reconciliation efficiency must lie in (0, 1], got {self.reconciliation_efficiency}"
            )


@dataclass(frozen=True)
class ChannelParams:
    """Practical channel: transmittance and excess noise (SNU, input-referred).

    Only ``0 < T <= 1`` is enforced. Excess noise is a plain real so that
    biased estimates (which can go negative) fit the same type.
    """

    transmittance: float
    excess_noise: float = 0.0

    def __post_init__(self):
        if not 0 < self.transmittance <= 1:
            raise DomainError(f"transmittance must lie in (0, 1], got {self.transmittance}")

    @property
    def noise_variance(self) -> float:
        """Variance of the output-referred noise draw: vacuum plus T*eps."""
        return 1.0 + self.transmittance * self.excess_noise


@dataclass(frozen=True)
class DistanceModel:
    loss_db_per_km: float = 0.2

    def __post_init__(self):
        if not self.loss_db_per_km > 0:
            raise DomainError(f"loss coefficient must be > 0, got {self.loss_db_per_km}")


@dataclass
class QuadratureBatch:
    x_a: np.ndarray
    x_b: np.ndarray
    calibrated_snu: float = 1.0
    master_seed: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x_a = np.asarray(self.x_a, dtype=np.float64)
        self.x_b = np.asarray(self.x_b, dtype=np.float64)
        if self.x_a.shape != self.x_b.shape:
            raise DomainError("x_a and x_b must have equal length")
        if not self.calibrated_snu > 0:
            raise DomainError("calibrated SNU must be > 0")

    def __len__(self):
        return self.x_a.shape[0]


def distance_to_transmittance(distance_km: float, model: DistanceModel | None = None) -> float:
    model = model or DistanceModel()
    if distance_km < 0:
        raise DomainError(f"distance must be >= 0, got {distance_km}")
    return 10.0 ** (-model.loss_db_per_km * distance_km / 10.0)


def chunk_rng(seed: int, stream: int, chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), int(chunk)))
    return np.random.Generator(np.random.PCG64(ss))


def chunk_bounds(n: int, chunk_size: int = CHUNK_SIZE):
    return [(lo, min(lo + chunk_size, n)) for lo in range(0, n, chunk_size)]


def standard_normals(n: int, seed: int, stream: int, workers: int = 1) -> np.ndarray:
    """``n`` standard normal draws laid out chunk by chunk."""
    out = np.empty(n)

    def fill(c_bounds):
        c, (lo, hi) = c_bounds
        chunk_rng(seed, stream, c).standard_normal(out=out[lo:hi])

    jobs = list(enumerate(chunk_bounds(n)))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, jobs))
    else:
        for job in jobs:
            fill(job)
    return out


def generate_alice_samples(n: int, params: ProtocolParams, seed: int, workers: int = 1) -> np.ndarray:
    """Alice's Gaussian modulation values: i.i.d. N(0, V_A)."""
    if n < 1:
        raise EmptyBatchError("need at least one sample")
    return standard_normals(n, seed, ALICE_STREAM, workers) * math.sqrt(params.modulation_variance)


def simulate_round(x_a, ch: ChannelParams, seed: int, workers: int = 1) -> np.ndarray:
    """Bob's normalized homodyne values without attack: sqrt(T)*x_a + z."""
    x_a = np.ascontiguousarray(x_a, dtype=np.float64)
    if x_a.shape[0] == 0:
        raise EmptyBatchError("empty modulation batch")
    if ch.noise_variance < 0:
        raise DomainError("excess noise below -1/T gives a negative noise variance")
    z = standard_normals(x_a.shape[0], seed, NOISE_STREAM, workers) * math.sqrt(ch.noise_variance)
    return _kernels.homodyne_output(x_a, z, math.sqrt(ch.transmittance), 1.0)


def simulate_batch(n: int, params: ProtocolParams, ch: ChannelParams, seed: int,
                   workers: int = 1) -> QuadratureBatch:
    x_a = generate_alice_samples(n, params, seed, workers)
    x_b = simulate_round(x_a, ch, seed, workers)
    return QuadratureBatch(x_a, x_b, 1.0, seed)
