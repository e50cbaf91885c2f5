"""Physics of the LO polarization attack.

Eve rotates the orientation angle of the unmeasured LO pulses by ``theta``.
Only the LO component parallel to the PBS slow axis reaches the homodyne
detector, so the practical SNU of those pulses shrinks while Bob keeps
normalizing by the calibrated value.

Two intensity laws are supported through ``convention``:

``"paper"``
    intensity factor ``cos(theta)`` (amplitude ``sqrt(cos(theta))``), the
    form the attack analysis and its shot-noise fit are built on.
``"squared"``
    the textbook Malus law, intensity factor ``cos(theta)**2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_model import ChannelParams, simulate_round
from .errors import DegenerateAttackError, DomainError, InfeasibleAttackError

CONVENTIONS = ("paper", "squared")
HALF_PI = math.pi / 2


@dataclass(frozen=True)
class ShotNoiseModel:
    """Constituents of the calibrated SNU.

    ``detector_gain`` is the proportionality constant between LO intensity
    and detector output variance (gain and efficiency of the detector).
    """

    pbs_loss: float = 1.0
    detector_gain: float = 1.0
    lo_intensity: float = 1.0
    vacuum_variance: float = 1.0

    def __post_init__(self):
        for name in ("pbs_loss", "detector_gain", "lo_intensity", "vacuum_variance"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be > 0")


@dataclass(frozen=True)
class AttackParams:
    orientation_angle: float
    pmr: float

    def __post_init__(self):
        check_angle(self.orientation_angle)
        if not 0 <= self.pmr <= 1:
            raise DomainError(f"PMR must lie in [0, 1], got {self.pmr}")


def check_angle(theta: float) -> float:
    if not 0 <= theta <= HALF_PI:
        raise DomainError(f"orientation angle must lie in [0, pi/2], got {theta}")
    return theta


def _check_convention(convention):
    if convention not in CONVENTIONS:
        raise DomainError(f"unknown Malus convention {convention!r}; expected one of {CONVENTIONS}")


def intensity_factor(theta: float, convention: str = "paper") -> float:
    """Fraction of LO intensity left on the detector path at angle ``theta``."""
    check_angle(theta)
    _check_convention(convention)
    c = 0.0 if theta == HALF_PI else math.cos(theta)
    return c if convention == "paper" else c * c


def malus_split(i_lo: float, alpha: float, theta: float, convention: str = "paper"):
    """Split an LO pulse at the PBS into (parallel, orthogonal) intensities.

    The parallel part feeds the homodyne detector; the orthogonal part leaks
    into the signal path.
    """
    check_angle(theta)
    _check_convention(convention)
    if theta == HALF_PI:
        c, s = 0.0, 1.0
    else:
        c, s = math.cos(theta), math.sin(theta)
    if convention == "squared":
        c, s = c * c, s * s
    return alpha * i_lo * c, alpha * i_lo * s


def calibrated_snu(model: ShotNoiseModel) -> float:
    return model.pbs_loss * model.detector_gain * model.lo_intensity * model.vacuum_variance


def practical_snu(n0: float, theta: float, convention: str = "paper") -> float:
    return n0 * intensity_factor(theta, convention)


def attacked_samples(x_a, ch: ChannelParams, theta: float, seed: int,
                     convention: str = "paper", workers: int = 1) -> np.ndarray:
    """Normalized homodyne values of pulses measured with an attacked LO.

    The raw output scales with the practical SNU but Bob divides by the
    calibrated one, so every value shrinks by ``sqrt(N0'/N0)``. Uses the same
    noise draws as :func:`simulate_round` for the same seed.
    """
    amp = math.sqrt(intensity_factor(theta, convention))
    return amp * simulate_round(x_a, ch, seed, workers)


def max_attack_estimates(t: float, eps: float, k: float):
    """Estimates (T', eps') when every unmeasured pulse is fully blocked."""
    if not 0 < k <= 1:
        if k == 0:
            raise DegenerateAttackError("k = 0: every pulse is attacked, estimates undefined")
        raise DomainError(f"PMR must lie in (0, 1], got {k}")
    if not t > 0:
        raise DomainError("transmittance must be > 0")
    return k * k * t, eps - (1.0 / t) * (1.0 / (k * k) - 1.0)


def plan_attack(t: float, eps_intro: float, eps_target: float, k: float,
                convention: str = "paper") -> float:
    """Orientation angle that makes Alice and Bob estimate ``eps_target``.

    The biased excess-noise estimate is
    ``eps - (1/T) * (1/A**2 - 1)`` with ``A = (1-k)*sqrt(f) + k`` and ``f``
    the intensity factor, so the required amplitude is
    ``A = 1/sqrt(1 + T*(eps_intro - eps_target))`` and
    ``f = ((A - k)/(1 - k))**2``.

    Raises
    ------
    InfeasibleAttackError
        if even a fully blocked unmeasured LO (``A = k``) cannot hide the
        requested amount of noise.
    """
    _check_convention(convention)
    if not t > 0:
        raise DomainError("transmittance must be > 0")
    if eps_intro < eps_target:
        raise DomainError(f"eps_intro ({eps_intro}) must be >= eps_target ({eps_target})")
    if not 0 <= k < 1:
        raise DomainError(f"PMR must lie in [0, 1) for planning, got {k}")
    hidden = t * (eps_intro - eps_target)
    if hidden == 0:
        return 0.0
    if k * k * (1.0 + hidden) > 1.0:
        raise InfeasibleAttackError(
            f"cannot hide T*d_eps = {hidden:.6g} at k = {k}: limit is 1/k^2 - 1 = {1 / (k * k) - 1:.6g}"
        )
    amp = 1.0 / math.sqrt(1.0 + hidden)
    f = ((amp - k) / (1.0 - k)) ** 2
    f = min(max(f, 0.0), 1.0)
    c = f if convention == "paper" else math.sqrt(f)
    return math.acos(c)
