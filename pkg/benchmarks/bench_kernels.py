"""Time the numba kernels against their pure-numpy twins.

    python3 benchmarks/bench_kernels.py [--n 4000000] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from polattack import _kernels as K


def _cases(n):
    rng = np.random.default_rng(0)
    xa = rng.standard_normal(n) * np.sqrt(19.0)
    z = rng.standard_normal(n)
    cycle = 64
    theta = np.cumsum(np.full(n, 6.8e-6))
    mask = np.zeros(n, dtype=np.bool_)
    mask[::cycle // 4] = True

    def transmit(f):
        out = np.zeros(K.N_MOMENTS)
        f(xa, z, np.sqrt(0.5), 1.0, out)
        return out

    return {
        "transmit_accumulate": (lambda f: transmit(f)),
        "compensate": (lambda f: f(theta, mask, cycle)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not K.KERNELS_NUMBA:
        print("numba unavailable; nothing to compare")
        return 0
    print(f"{'kernel':<22}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, run in _cases(args.n).items():
        fast, slow = K.KERNELS_NUMBA[name], K.KERNELS_NUMPY[name]
        a, b = run(fast), run(slow)  # warm-up, also compiles
        a = a[0] if isinstance(a, tuple) else a
        b = b[0] if isinstance(b, tuple) else b
        assert np.allclose(a, b, rtol=1e-9, atol=1e-9), name
        t_np = min(timeit.repeat(lambda: run(slow), number=1, repeat=args.repeat)) * 1e3
        t_nb = min(timeit.repeat(lambda: run(fast), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<22}{t_np:>12.2f}{t_nb:>12.2f}{t_np / t_nb:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
