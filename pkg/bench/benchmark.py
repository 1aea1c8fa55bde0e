"""Time the compiled coordinate-descent kernel against the pure-Python one.

    python3 bench/benchmark.py [--dims 20 50 100 200] [--repeats 3]

Each case builds a random sparse-regression lasso problem, runs both kernels
from zero with the same tolerance, checks that the solutions agree and prints
the best wall time of each.
"""

import argparse
import sys
import time

import numpy as np

from hdpareto import datagen, rng
from hdpareto._ext import backends


def problem(d, n, seed):
    gen = rng.stream(seed, "bench")
    X = rng.normal(gen, (n, d))
    beta = datagen.random_sparse_vector(d, max(1, d // 10), seed)
    y = X @ beta + 0.5 * rng.normal(gen, n)
    return X.T @ X / n, X.T @ y / n


def best_time(kernel, args, repeats):
    times, out = [], None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = kernel(*args)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=int, nargs="+", default=[20, 50, 100, 200])
    ap.add_argument("--alphas", type=float, nargs="+", default=[1e-3, 1e-1])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--tol", type=float, default=1e-10)
    args = ap.parse_args(argv)

    kernels = backends()
    if "cython" not in kernels:
        print("compiled kernel unavailable; only the Python kernel is importable", file=sys.stderr)
        return 1

    print(f"{'d':>5} {'alpha':>8} {'cycles':>7} {'python [s]':>11} {'cython [s]':>11} {'speedup':>8} {'max |diff|':>11}")
    for d in args.dims:
        A, v = problem(d, 2 * d, seed=d)
        for alpha in args.alphas:
            call = (A, v, alpha, np.zeros(d), args.tol, 100_000)
            tp, (th_p, cyc, _, _) = best_time(kernels["python"].cd_quadratic_l1, call, args.repeats)
            tc, (th_c, _, _, _) = best_time(kernels["cython"].cd_quadratic_l1, call, args.repeats)
            diff = float(np.max(np.abs(np.asarray(th_p) - np.asarray(th_c))))
            print(f"{d:>5} {alpha:>8.0e} {cyc:>7} {tp:>11.4f} {tc:>11.5f} {tp / tc:>8.1f} {diff:>11.1e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
