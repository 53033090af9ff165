"""Benchmark the compiled kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from spdhg import _kernels_py

try:
    from spdhg import _kernels
except ImportError:
    _kernels = None


def best_of(fn, args, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench(repeats):
    rng = np.random.default_rng(0)
    rows = []
    for n in (64, 256, 1024):
        x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        y = rng.standard_normal((n, n, 2)) + 1j * rng.standard_normal((n, n, 2))
        v = rng.standard_normal(4 * n * n)
        b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        cases = [
            (f"gradient_forward {n}x{n}", "gradient_forward", (x,)),
            (f"gradient_adjoint {n}x{n}", "gradient_adjoint", (y,)),
            (f"group_project    {n}x{n}x4", "group_project", (v, 0.5, 4)),
            (f"group_norms      {n}x{n}x4", "group_norms", (v, 4)),
            (f"sqdist_dual_prox {n}x{n}", "sqdist_dual_prox", (x, b, 0.7)),
        ]
        for label, name, args in cases:
            t_py = best_of(getattr(_kernels_py, name), args, repeats)
            if _kernels is not None:
                t_c = best_of(getattr(_kernels, name), args, repeats)
                rows.append((label, t_py, t_c, t_py / t_c))
            else:
                rows.append((label, t_py, None, None))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()
    if _kernels is None:
        print("compiled extension not built; timing the fallback only")
    print(f"{'kernel':<28} {'python':>10} {'compiled':>10} {'speedup':>8}")
    for label, t_py, t_c, speedup in bench(args.repeats):
        if t_c is None:
            print(f"{label:<28} {t_py * 1e6:>8.1f}us {'-':>10} {'-':>8}")
        else:
            print(f"{label:<28} {t_py * 1e6:>8.1f}us {t_c * 1e6:>8.1f}us "
                  f"{speedup:>7.1f}x")


if __name__ == "__main__":
    main()
