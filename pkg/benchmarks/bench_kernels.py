"""Time every kernel through its numba and pure-numpy implementation.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Numba timings exclude the first (compiling) call.
"""
from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from gomkit import _accel, kernels


def cases(rng):
    cost = rng.random((300, 300))
    X = rng.standard_normal((2000, 12))
    y = X @ rng.standard_normal(12) + 0.1 * rng.standard_normal(2000)
    series = np.cumsum(rng.standard_normal(2000))
    exog = rng.standard_normal(2000)
    D = 54
    lag1 = np.eye(D) * 1.6 + 0.01 * rng.standard_normal((D, D))
    lag2 = np.full(D, -0.7)
    n, T = 8, 400
    A = rng.random((n, n))
    A /= A.sum(axis=1, keepdims=True)
    log_A, log_pi = np.log(A), np.log(np.full(n, 1.0 / n))
    log_B = rng.normal(-5, 2, (T, n))
    alpha, ll = kernels.forward_numpy(log_pi, log_A, log_B)
    beta = kernels.backward_numpy(log_A, log_B)
    return {
        "dtw_accumulate 300x300": ("dtw_accumulate", (cost,)),
        "rls_filter 2000x12": ("rls_filter", (X, y, np.zeros(12), np.eye(12) * 1e8)),
        "arx_kalman T=2000": ("arx_kalman", (series, exog, 1.5, -0.7, 0.5,
                                             series[[1, 0]].copy(), np.zeros((2, 2)))),
        "simulate D=54 T=500": ("simulate", (rng.standard_normal(D), rng.standard_normal(D),
                                             lag1, lag2, 500, 1e300)),
        "forward n=8 T=400": ("forward", (log_pi, log_A, log_B)),
        "backward n=8 T=400": ("backward", (log_A, log_B)),
        "xi_sum n=8 T=400": ("xi_sum", (alpha, beta, log_A, log_B, ll)),
    }


def best_of(fn, args, repeat):
    fn(*args)  # warm-up / compile
    runs = max(1, int(0.2 / max(timeit.timeit(lambda: fn(*args), number=1), 1e-6)))
    return min(timeit.repeat(lambda: fn(*args), number=runs, repeat=repeat)) / runs


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--json", help="also write results here")
    args = p.parse_args(argv)
    if not _accel.HAS_NUMBA:
        print("numba is unavailable; the *_numba kernels run as plain Python loops")
    rng = np.random.default_rng(0)
    rows = []
    print(f"{'kernel':<26}{'numba [ms]':>12}{'numpy [ms]':>12}{'speed-up':>10}")
    for label, (name, fargs) in cases(rng).items():
        t_nb = best_of(getattr(kernels, f"{name}_numba"), fargs, args.repeat)
        t_np = best_of(getattr(kernels, f"{name}_numpy"), fargs, args.repeat)
        rows.append({"kernel": label, "numba_s": t_nb, "numpy_s": t_np})
        print(f"{label:<26}{t_nb * 1e3:>12.3f}{t_np * 1e3:>12.3f}{t_np / t_nb:>9.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
