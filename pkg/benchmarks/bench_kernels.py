"""Compiled vs pure-Python kernels: timings and agreement.

    python3 benchmarks/bench_kernels.py [--repeat N] [--steps M ...]

Times the two hot loops (the implicit Caputo stepper and one shell of the
multivariate series) on both backends and prints the speed-up together with
the largest difference between the two results.
"""

import argparse
import math
import time

import numpy as np

from fracspec import kernels
from fracspec.caputo_oracle import TimeGrid, default_grading


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def bench_stepper(steps, repeat):
    rows = []
    cases = {
        "relaxation b=0.5": ((0.5,), (1.0,), 1.0, 1.0, 0.0),
        "oscillation b=1.5": ((1.5,), (1.0,), 4.0, 1.0, 0.0),
        "three-term b=1.8": ((1.8, 1.2, 0.4), (1.0, 0.5, 0.3), 1.0, 1.0, 0.0),
    }
    for M in steps:
        for label, (orders, weights, gamma, u0, u1) in cases.items():
            t = TimeGrid.graded(2.0, M, default_grading(orders[0])).nodes
            res = {}
            for name in kernels.available():
                kernels.use(name)
                res[name] = best_of(lambda: kernels.step_fode(t, orders, weights, gamma, u0, u1, 1e12), repeat)
            rows.append((f"step_fode {label}", M, res))
    return rows


def bench_shells(repeat):
    rows = []
    betas = np.array([0.5, 1.3, 0.8])
    logz = np.log(np.array([3.0, 2.0, 5.0]))
    negs = np.ones(3, dtype=np.int64)
    for K in (20, 60, 120):
        res = {}
        for name in kernels.available():
            kernels.use(name)
            res[name] = best_of(lambda: kernels.shell_sum(betas, 1.2, logz, negs, K), repeat)
        rows.append(("shell_sum m=3", K, res))
    return rows


def diff(a, b):
    a = np.atleast_1d(np.asarray(a[0] if isinstance(a, tuple) else a, dtype=float))
    b = np.atleast_1d(np.asarray(b[0] if isinstance(b, tuple) else b, dtype=float))
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--steps", type=int, nargs="+", default=[512, 2048])
    args = ap.parse_args(argv)
    before = kernels.BACKEND
    try:
        rows = bench_stepper(args.steps, args.repeat) + bench_shells(args.repeat)
    finally:
        kernels.use("compiled" if before == "compiled" else "python")
    have_c = "compiled" in kernels.available()
    print(f"{'kernel':<32}{'size':>7}{'python [s]':>13}{'compiled [s]':>14}{'speed-up':>10}{'max rel diff':>14}")
    for label, size, res in rows:
        tp, outp = res["python"]
        if have_c:
            tc, outc = res["compiled"]
            print(f"{label:<32}{size:>7}{tp:>13.4f}{tc:>14.4f}{tp / tc:>10.1f}{diff(outp, outc):>14.1e}")
        else:
            print(f"{label:<32}{size:>7}{tp:>13.4f}{'n/a':>14}{'':>10}{'':>14}")
    if not have_c:
        print("compiled extension not built: only the numpy fallback was timed")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
