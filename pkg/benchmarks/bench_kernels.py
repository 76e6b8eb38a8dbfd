#!/usr/bin/env python3
"""Time the numba kernels against their numpy counterparts.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import time

import numpy as np

from tildelab import _kernels as K
from tildelab.qstate import random_mixed


def best_of(fn, repeat):
    fn()  # warm-up (includes JIT compilation on the first call)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def row(name, t_np, t_nb, err):
    print(f"{name:<34} numpy {t_np * 1e3:9.2f} ms   numba {t_nb * 1e3:9.2f} ms   "
          f"x{t_np / t_nb:6.1f}   max diff {err:.1e}")


def bench_partial_trace(repeat):
    for dims in [(2,) * 8, (4, 4, 4, 4), (3, 3, 3, 3, 3)]:
        rho = random_mixed(dims, 8, seed=0).mat
        masks = range(1, (1 << len(dims)) - 1)

        def run(fn):
            return [fn(rho, dims, m) for m in masks]

        err = max(np.abs(a - b).max() for a, b in zip(run(K.partial_trace_numpy),
                                                       run(K.partial_trace_numba)))
        row(f"partial traces {dims}", best_of(lambda: run(K.partial_trace_numpy), repeat),
            best_of(lambda: run(K.partial_trace_numba), repeat), err)


def bench_margins(repeat):
    rng = np.random.default_rng(0)
    n = 200_000
    w = rng.random((n, 3, 3))
    d = rng.random((n, 3))
    err = np.abs(K.mon3_margins_numpy(w, d) - K.mon3_margins_loops(w, d)).max()
    row(f"mon3 margins, {n} draws", best_of(lambda: K.mon3_margins_numpy(w, d), repeat),
        best_of(lambda: K.mon3_margins_loops(w, d), repeat), err)
    f = rng.random((4, 4))
    f = f + f.T
    lam = rng.dirichlet(np.ones(4), size=n)
    d = rng.random((n, 4))
    for square in (False, True):
        err = np.abs(K.search_margins_numpy(f, lam, d, square)
                     - K.search_margins_loops(f, lam, d, square)).max()
        row(f"search margins ({'cd2' if square else 'cd'}), {n} draws",
            best_of(lambda: K.search_margins_numpy(f, lam, d, square), repeat),
            best_of(lambda: K.search_margins_loops(f, lam, d, square), repeat), err)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"numba active by default: {K.USE_NUMBA}")
    bench_partial_trace(args.repeat)
    bench_margins(args.repeat)
