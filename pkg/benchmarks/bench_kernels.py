"""Time the numba and numpy backends of the hot kernels.

    python3 benchmarks/bench_kernels.py [--sizes 64 128 256] [--repeat 20]

Also checks that both backends return bitwise-identical arrays.
"""

import argparse
import time

import numpy as np

from nlps import _kernels


def best_of(fn, args, repeat):
    fn(*args)  # warm-up (triggers JIT compilation)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--conv-max", type=int, default=32, help="largest n for the O(n^4) direct convolution")
    args = ap.parse_args()

    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'n':>6}{'numpy [ms]':>14}{'numba [ms]':>14}{'speedup':>10}  bitwise")
    for n in args.sizes:
        phi = rng.uniform(0, 1, (n, n))
        m = phi * rng.uniform(-1, 1, (n, n))
        jx, jy, src = rng.normal(size=(3, n, n))
        cases = [
            ("explicit_update", _kernels.explicit_update_numpy, _kernels.explicit_update_numba,
             (m, phi, jx, jy, 1e-6, float(n * n), 10.0 * n, 0.1)),
            ("fd_update", _kernels.fd_update_numpy, _kernels.fd_update_numba,
             (phi, m, jx, jy, src, 1e-6, float(n * n), 10.0 * n)),
        ]
        if n <= args.conv_max:
            cases.append(("direct_convolve", _kernels.direct_convolve_numpy,
                          _kernels.direct_convolve_numba, (m, phi, 1.0 / n**2)))
        for name, f_np, f_nb, fargs in cases:
            t_np = best_of(f_np, fargs, args.repeat)
            t_nb = best_of(f_nb, fargs, args.repeat)
            a, b = f_np(*fargs), f_nb(*fargs)
            same = all(np.array_equal(x, y) for x, y in zip(a, b)) if isinstance(a, tuple) else np.array_equal(a, b)
            print(f"{name:<18}{n:>6}{1e3 * t_np:>14.3f}{1e3 * t_nb:>14.3f}{t_np / t_nb:>9.1f}x  {same}")


if __name__ == "__main__":
    main()
