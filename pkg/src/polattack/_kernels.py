"""Hot inner loops, compiled with numba when available.

Every kernel has a pure-numpy twin with the same signature. The active
backend is picked once at import time: numba unless the environment variable
``POLATTACK_PURE_NUMPY`` is set to a truthy value or numba fails to import.
Both twins are always importable (``*_numba`` / ``*_numpy``) so the benchmark
and the tests can compare them directly.
"""
import os

import numpy as np

# Moment slots written by the accumulate kernels:
#   0: sum xa^2   1: sum xa*xb   2: sum xb^2
#   3..8: sums of products u_i*u_j for u = (xa^2, xa*xb, xb^2), upper triangle
N_MOMENTS = 9

_TRUTHY = {"1", "true", "yes", "on"}


def _numba_disabled():
    return os.environ.get("POLATTACK_PURE_NUMPY", "").strip().lower() in _TRUTHY


def homodyne_output_numpy(xa, z, sqrt_t, scale):
    return scale * (sqrt_t * xa + z)


def accumulate_moments_numpy(xa, xb, out):
    u1 = xa * xa
    u2 = xa * xb
    u3 = xb * xb
    out[0] += u1.sum()
    out[1] += u2.sum()
    out[2] += u3.sum()
    out[3] += (u1 * u1).sum()
    out[4] += (u1 * u2).sum()
    out[5] += (u1 * u3).sum()
    out[6] += (u2 * u2).sum()
    out[7] += (u2 * u3).sum()
    out[8] += (u3 * u3).sum()


def transmit_accumulate_numpy(xa, z, sqrt_t, scale, out):
    accumulate_moments_numpy(xa, homodyne_output_numpy(xa, z, sqrt_t, scale), out)


def compensate_numpy(theta, ref_mask, cycle_length):
    n = theta.shape[0]
    n_cycles = -(-n // cycle_length)
    pad = n_cycles * cycle_length - n
    th = np.concatenate((theta, np.zeros(pad))).reshape(n_cycles, cycle_length)
    mk = np.concatenate((ref_mask, np.zeros(pad, dtype=np.bool_))).reshape(n_cycles, cycle_length)
    counts = mk.sum(axis=1)
    sums = np.where(mk, th, 0.0).sum(axis=1)
    measured = np.divide(sums, counts, out=np.full(n_cycles, np.nan), where=counts > 0)
    corrections = np.zeros(n_cycles)
    corrections[1:] = measured[:-1]
    residual = (th - corrections[:, None]).reshape(-1)[:n]
    return residual, corrections


KERNELS_NUMPY = {
    "homodyne_output": homodyne_output_numpy,
    "accumulate_moments": accumulate_moments_numpy,
    "transmit_accumulate": transmit_accumulate_numpy,
    "compensate": compensate_numpy,
}

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None

KERNELS_NUMBA = {}

if njit is not None:

    @njit(cache=True, nogil=True)
    def homodyne_output_numba(xa, z, sqrt_t, scale):
        out = np.empty_like(xa)
        for i in range(xa.shape[0]):
            out[i] = scale * (sqrt_t * xa[i] + z[i])
        return out

    @njit(cache=True, nogil=True)
    def accumulate_moments_numba(xa, xb, out):
        s0 = s1 = s2 = s3 = s4 = s5 = s6 = s7 = s8 = 0.0
        for i in range(xa.shape[0]):
            a = xa[i]
            b = xb[i]
            u1 = a * a
            u2 = a * b
            u3 = b * b
            s0 += u1
            s1 += u2
            s2 += u3
            s3 += u1 * u1
            s4 += u1 * u2
            s5 += u1 * u3
            s6 += u2 * u2
            s7 += u2 * u3
            s8 += u3 * u3
        out[0] += s0
        out[1] += s1
        out[2] += s2
        out[3] += s3
        out[4] += s4
        out[5] += s5
        out[6] += s6
        out[7] += s7
        out[8] += s8

    @njit(cache=True, nogil=True)
    def transmit_accumulate_numba(xa, z, sqrt_t, scale, out):
        s0 = s1 = s2 = s3 = s4 = s5 = s6 = s7 = s8 = 0.0
        for i in range(xa.shape[0]):
            a = xa[i]
            b = scale * (sqrt_t * a + z[i])
            u1 = a * a
            u2 = a * b
            u3 = b * b
            s0 += u1
            s1 += u2
            s2 += u3
            s3 += u1 * u1
            s4 += u1 * u2
            s5 += u1 * u3
            s6 += u2 * u2
            s7 += u2 * u3
            s8 += u3 * u3
        out[0] += s0
        out[1] += s1
        out[2] += s2
        out[3] += s3
        out[4] += s4
        out[5] += s5
        out[6] += s6
        out[7] += s7
        out[8] += s8

    @njit(cache=True, nogil=True)
    def compensate_numba(theta, ref_mask, cycle_length):
        n = theta.shape[0]
        n_cycles = (n + cycle_length - 1) // cycle_length
        corrections = np.zeros(n_cycles)
        residual = np.empty(n)
        applied = 0.0
        for j in range(n_cycles):
            corrections[j] = applied
            lo = j * cycle_length
            hi = min(lo + cycle_length, n)
            acc = 0.0
            cnt = 0
            for i in range(lo, hi):
                residual[i] = theta[i] - applied
                if ref_mask[i]:
                    acc += theta[i]
                    cnt += 1
            # feedback takes effect one cycle later
            applied = acc / cnt if cnt > 0 else np.nan
        return residual, corrections

    KERNELS_NUMBA = {
        "homodyne_output": homodyne_output_numba,
        "accumulate_moments": accumulate_moments_numba,
        "transmit_accumulate": transmit_accumulate_numba,
        "compensate": compensate_numba,
    }


BACKEND = "numba" if KERNELS_NUMBA and not _numba_disabled() else "numpy"
_active = KERNELS_NUMBA if BACKEND == "numba" else KERNELS_NUMPY

homodyne_output = _active["homodyne_output"]
accumulate_moments = _active["accumulate_moments"]
transmit_accumulate = _active["transmit_accumulate"]
compensate = _active["compensate"]
