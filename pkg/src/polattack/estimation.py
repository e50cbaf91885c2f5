"""Channel-parameter estimation, honest and under attack.

Two closed forms for the attacked estimates ship side by side:

* :func:`attacked_estimates_paper` treats every detection as the single
  linear combination ``(1-k)*X'_B + k*X_B``.
* :func:`attacked_estimates_pooled` is the expectation of the honest
  estimator over a data set made of ``k*n`` unattacked and ``(1-k)*n``
  attacked samples, which is what a physical run produces.

Both agree on T'. The pooled excess-noise estimate is larger by
``k(1-k)(1-sqrt(f))**2 * (T*V_A + 1 + T*eps) / (A**2 * T)``.
:func:`monte_carlo_attacked_run` measures either one directly.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .attack import intensity_factor
from .core_model import (
    ALICE_STREAM,
    CHUNK_SIZE,
    NOISE_STREAM,
    ChannelParams,
    ProtocolParams,
    chunk_bounds,
    chunk_rng,
)
from .errors import DegenerateAttackError, DegenerateDataError, DomainError

MIN_MC_SAMPLES = 10_000
COMBINE_MODES = ("pooled", "per_sample")


@dataclass(frozen=True)
class ChannelEstimate:
    """Estimated (T, eps) with delta-method standard errors."""

    t_hat: float
    eps_hat: float
    n_samples: int
    t_se: float = math.nan
    eps_se: float = math.nan

    def __post_init__(self):
        if self.n_samples < 2:
            raise DomainError("an estimate needs at least two samples")


def _check_pmr(k):
    if not 0 <= k <= 1:
        raise DomainError(f"PMR must lie in [0, 1], got {k}")


def amplitude_factor(theta, k, convention="paper"):
    """Mean amplitude scaling A = (1-k)*sqrt(f) + k of one detection."""
    _check_pmr(k)
    return (1.0 - k) * math.sqrt(intensity_factor(theta, convention)) + k


def _estimate_from_strata(sums, counts, va):
    """Turn per-stratum moment sums into an estimate plus standard errors.

    ``sums`` has shape (n_strata, 9) in the slot layout of the kernels. The
    covariance of the pooled means is assembled stratum by stratum since the
    strata have fixed, not random, sizes.
    """
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum()
    m = sums[:, :3].sum(axis=0) / n
    m1, m2, m3 = m
    if m1 == 0:
        raise DegenerateDataError("<x_a^2> is zero")
    t_hat = (m2 / m1) ** 2
    if t_hat == 0:
        raise DegenerateDataError("estimated transmittance is zero")
    eps_hat = (m3 - 1.0 - t_hat * va) / t_hat

    cov = np.zeros((3, 3))
    iu = np.triu_indices(3)
    for s, c in zip(sums, counts):
        if c < 2:
            continue
        mean_s = s[:3] / c
        second = np.zeros((3, 3))
        second[iu] = s[3:] / c
        second = second + np.triu(second, 1).T
        cov += c * (second - np.outer(mean_s, mean_s))
    cov /= n * n

    g_t = np.array([-2.0 * m2 * m2 / m1 ** 3, 2.0 * m2 / m1 ** 2, 0.0])
    g_e = -(m3 - 1.0) / t_hat ** 2 * g_t + np.array([0.0, 0.0, 1.0 / t_hat])
    t_se = math.sqrt(max(g_t @ cov @ g_t, 0.0))
    eps_se = math.sqrt(max(g_e @ cov @ g_e, 0.0))
    return ChannelEstimate(float(t_hat), float(eps_hat), int(n), t_se, eps_se)


def estimate_channel(x_a, x_b, va: float) -> ChannelEstimate:
    """Honest estimator from paired data, using plain sample means.

    ``T = (<x_a x_b>/<x_a^2>)**2`` and ``eps = (<x_b^2> - 1 - T*V_A)/T``.
    """
    x_a = np.ascontiguousarray(x_a, dtype=np.float64)
    x_b = np.ascontiguousarray(x_b, dtype=np.float64)
    if x_a.shape != x_b.shape:
        raise DomainError("x_a and x_b must have equal length")
    if x_a.shape[0] < 2:
        raise DomainError("need at least two samples")
    sums = np.zeros((1, _kernels.N_MOMENTS))
    _kernels.accumulate_moments(x_a, x_b, sums[0])
    return _estimate_from_strata(sums, [x_a.shape[0]], va)


def attacked_estimates_paper(t, eps, theta, k, convention="paper"):
    """Closed-form (T', eps') for the per-detection linear combination."""
    amp = amplitude_factor(theta, k, convention)
    if amp == 0:
        raise DegenerateAttackError("A = 0: fully attacked LO gives no signal")
    a2 = amp * amp
    return a2 * t, eps - (1.0 / t) * (1.0 / a2 - 1.0)


def attacked_estimates_pooled(t, eps, theta, k, va, convention="paper"):
    """Expected honest estimates over a pooled reference/attacked data set."""
    amp = amplitude_factor(theta, k, convention)
    if amp == 0:
        raise DegenerateAttackError("A = 0: fully attacked LO gives no signal")
    f = intensity_factor(theta, convention)
    b = (1.0 - k) * f + k
    a2 = amp * amp
    t_hat = a2 * t
    eps_hat = (b * (t * va + 1.0 + t * eps) - 1.0 - a2 * t * va) / t_hat
    return t_hat, eps_hat


def pooled_gap(t, eps, theta, k, va, convention="paper"):
    """eps_pooled - eps_paper via the identity B - A^2 = k(1-k)(1-sqrt(f))^2."""
    amp = amplitude_factor(theta, k, convention)
    root_f = math.sqrt(intensity_factor(theta, convention))
    return k * (1.0 - k) * (1.0 - root_f) ** 2 * (t * va + 1.0 + t * eps) / (amp * amp * t)


def reference_count(n: int, k: float) -> int:
    # round first so that e.g. 0.6 * 10 does not ceil to 7
    return min(n, math.ceil(round(k * n, 9)))


def monte_carlo_attacked_run(proto: ProtocolParams, ch: ChannelParams, theta: float, k: float,
                             n: int, seed: int, combine: str = "pooled",
                             convention: str = "paper", workers: int = 1) -> ChannelEstimate:
    """Simulate an attacked run and apply the honest estimator.

    With ``combine="pooled"`` the first ``ceil(k*n)`` samples come from
    reference (unattacked) LO pulses and the rest from attacked ones. With
    ``combine="per_sample"`` every detection is scaled by the mean amplitude
    ``A``. Draws reuse the chunk layout of :mod:`polattack.core_model`, so
    ``theta = 0`` reproduces ``simulate_batch`` exactly.
    """
    if n < MIN_MC_SAMPLES:
        raise DomainError(f"Monte Carlo runs need n >= {MIN_MC_SAMPLES}, got {n}")
    if combine not in COMBINE_MODES:
        raise DomainError(f"unknown combine mode {combine!r}")
    _check_pmr(k)
    if ch.noise_variance < 0:
        raise DomainError("excess noise below -1/T gives a negative noise variance")
    amp_atk = math.sqrt(intensity_factor(theta, convention))
    if combine == "pooled":
        n_ref = reference_count(n, k)
        scales = (1.0, amp_atk)
    else:
        n_ref = n
        scales = (amplitude_factor(theta, k, convention), 0.0)
    sd_a = math.sqrt(proto.modulation_variance)
    sd_z = math.sqrt(ch.noise_variance)
    sqrt_t = math.sqrt(ch.transmittance)

    def run_chunk(job):
        c, (lo, hi) = job
        xa = chunk_rng(seed, ALICE_STREAM, c).standard_normal(hi - lo) * sd_a
        z = chunk_rng(seed, NOISE_STREAM, c).standard_normal(hi - lo) * sd_z
        out = np.zeros((2, _kernels.N_MOMENTS))
        cut = min(max(n_ref - lo, 0), hi - lo)
        if cut > 0:
            _kernels.transmit_accumulate(xa[:cut], z[:cut], sqrt_t, scales[0], out[0])
        if cut < hi - lo:
            _kernels.transmit_accumulate(xa[cut:], z[cut:], sqrt_t, scales[1], out[1])
        return out

    jobs = list(enumerate(chunk_bounds(n, CHUNK_SIZE)))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_chunk, jobs))
    else:
        parts = [run_chunk(j) for j in jobs]
    sums = np.sum(np.stack(parts), axis=0)
    return _estimate_from_strata(sums, [n_ref, n - n_ref], proto.modulation_variance)


CSV_FIELDS = ("n", "t_hat", "eps_hat", "theta", "k", "seed")


def estimate_row(est: ChannelEstimate, theta: float, k: float, seed: int) -> dict:
    return {"n": est.n_samples, "t_hat": est.t_hat, "eps_hat": est.eps_hat,
            "theta": theta, "k": k, "seed": seed}
