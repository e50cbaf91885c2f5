"""Asymptotic secret key rate with reverse reconciliation.

K = beta * I(A:B) - [S(AB) - S(A|x_B)], Eve's state purifying AB so that
S(E) = S(AB) and S(E|x_B) = S(A|x_B). Entropies come from symplectic
eigenvalues of the two-mode covariance matrix

    gamma = [[a*I, c*Z], [c*Z, b*I]],   Z = diag(1, -1)
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NoPositiveRateError, SolverError, UnphysicalStateError

PHYS_TOL = 1e-9

SIGMA_Z = np.diag([1.0, -1.0])
X_PROJ = np.diag([1.0, 0.0])


@dataclass(frozen=True)
class TwoModeCovariance:
    a: float
    b: float
    c: float

    def __post_init__(self):
        if self.a < 1 - PHYS_TOL or self.b < 1 - PHYS_TOL:
            raise UnphysicalStateError(f"diagonal entries must be >= 1, got a={self.a}, b={self.b}")
        if self.a * self.b - self.c ** 2 < 1 - PHYS_TOL * max(1.0, self.a * self.b):
            raise UnphysicalStateError(f"a*b - c^2 = {self.a * self.b - self.c ** 2} < 1")

    def matrix(self) -> np.ndarray:
        eye = np.eye(2)
        return np.block([[self.a * eye, self.c * SIGMA_Z], [self.c * SIGMA_Z, self.b * eye]])

    @property
    def gamma_a(self):
        return self.a * np.eye(2)

    @property
    def gamma_b(self):
        return self.b * np.eye(2)

    @property
    def c_ab(self):
        return self.c * SIGMA_Z


@dataclass(frozen=True)
class SymplecticSpectrum:
    lambda1: float
    lambda2: float
    lambda3: float


def build_covariance(va: float, t: float, eps: float) -> TwoModeCovariance:
    if not va >= 0:
        raise DomainError("modulation variance must be >= 0")
    if not 0 <= t <= 1:
        raise DomainError(f"transmittance must lie in [0, 1], got {t}")
    return TwoModeCovariance(va + 1.0, t * va + 1.0 + t * eps, math.sqrt(t * (va * va + 2.0 * va)))


def chi_total(t: float, eps: float) -> float:
    """Total input-referred added noise (1 - T)/T + eps."""
    if not t > 0:
        raise DomainError("transmittance must be > 0")
    return (1.0 - t) / t + eps


def mutual_information(va: float, chi: float) -> float:
    if chi < 0:
        raise DomainError("total noise must be >= 0")
    return 0.5 * math.log2((va + 1.0 + chi) / (chi + 1.0))


def symplectic_eigenvalues(gamma: TwoModeCovariance):
    """(lambda1, lambda2), lambda1 >= lambda2, of a two-mode covariance matrix."""
    a, b, c = gamma.a, gamma.b, gamma.c
    delta = a * a + b * b - 2.0 * c * c
    det = (a * b - c * c) ** 2
    disc = delta * delta - 4.0 * det
    if disc < -PHYS_TOL * max(1.0, delta * delta):
        raise UnphysicalStateError(f"negative discriminant {disc}")
    root = math.sqrt(max(disc, 0.0))
    l1 = math.sqrt((delta + root) / 2.0)
    # product form avoids cancellation for the smaller eigenvalue
    l2 = math.sqrt(det) / l1 if l1 > 0 else 0.0
    return l1, l2


def conditional_covariance_homodyne(gamma: TwoModeCovariance):
    """Alice's covariance after Bob homodynes x, and its symplectic eigenvalue.

    gamma_A - C (X gamma_B X)^MP C^T with X = diag(1, 0).
    """
    inner = np.linalg.pinv(X_PROJ @ gamma.gamma_b @ X_PROJ)
    cond = gamma.gamma_a - gamma.c_ab @ inner @ gamma.c_ab.T
    det = np.linalg.det(cond)
    if cond[0, 0] < -PHYS_TOL or det < -PHYS_TOL:
        raise UnphysicalStateError("conditional covariance is not positive")
    lam3 = math.sqrt(max(det, 0.0))
    return cond, lam3


def g_function(x: float) -> float:
    """Von Neumann entropy of a thermal state with mean photon number ``x``."""
    if x < 0:
        if x > -PHYS_TOL:
            return 0.0
        raise DomainError(f"G(x) needs x >= 0, got {x}")
    if x == 0:
        return 0.0
    return (x + 1.0) * math.log2(x + 1.0) - x * math.log2(x)


def spectrum(va, t, eps) -> SymplecticSpectrum:
    gamma = build_covariance(va, t, eps)
    l1, l2 = symplectic_eigenvalues(gamma)
    _, l3 = conditional_covariance_homodyne(gamma)
    return SymplecticSpectrum(l1, l2, l3)


def holevo_bound(va: float, t: float, eps: float) -> float:
    sp = spectrum(va, t, eps)
    return (g_function((sp.lambda1 - 1) / 2) + g_function((sp.lambda2 - 1) / 2)
            - g_function((sp.lambda3 - 1) / 2))


def secret_key_rate(va: float, beta: float, t: float, eps: float) -> float:
    """Bits per pulse. Negative values are returned as is."""
    if not 0 < beta <= 1:
        raise DomainError(f"reconciliation efficiency must lie in (0, 1], got {beta}")
    if not 0 < t <= 1:
        raise DomainError(f"transmittance must lie in (0, 1], got {t}")
    info = mutual_information(va, chi_total(t, eps))
    return beta * info - holevo_bound(va, t, eps)


def bisect(f, lo, hi, xtol=1e-12, max_iter=200):
    """Root of a continuous ``f`` with ``f(lo) > 0 > f(hi)`` (or reversed)."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise SolverError("root is not bracketed")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= xtol:
            break
    return 0.5 * (lo + hi)


def tolerable_excess_noise(va: float, beta: float, t: float, xtol: float = 1e-12,
                           max_iter: int = 200, monotone_checks: int = 33) -> float:
    """Excess noise at which the key rate reaches zero."""
    rate = lambda e: secret_key_rate(va, beta, t, e)  # noqa: E731
    if rate(0.0) <= 0:
        raise NoPositiveRateError(f"no positive key rate at T={t} even without excess noise")
    hi = 1.0
    for _ in range(60):
        if rate(hi) < 0:
            break
        hi *= 2.0
    else:
        raise SolverError("could not bracket the zero of the key rate")
    grid = np.linspace(0.0, hi, monotone_checks)
    values = [rate(e) for e in grid]
    if np.any(np.diff(values) >= 0):
        raise SolverError("key rate is not decreasing in excess noise over the bracket")
    return bisect(rate, 0.0, hi, xtol, max_iter)
