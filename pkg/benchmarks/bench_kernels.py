#!/usr/bin/env python3
"""Benchmark the numba neighbor-forecast kernel against the numpy fallback.

Usage:
    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --library 2000 --queries 2000 --dims 8
"""
import argparse
import time

import numpy as np

from ensembed._kernels import HAVE_NUMBA, panel_forecasts


def make_workload(m, nq, dims, horizons, seed=0):
    rng = np.random.default_rng(seed)
    lib = rng.standard_normal((m, dims))
    fut = rng.standard_normal((m, horizons))
    for p in range(horizons):  # contiguous-training style validity
        fut[m - (p + 1):, p] = np.nan
    tlib = np.arange(m, dtype=np.int64)
    queries = lib[:nq].copy()
    tq = tlib[:nq].copy()
    return lib, fut, tlib, queries, tq


def best_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--library", type=int, default=1000, help="library size")
    parser.add_argument("--queries", type=int, default=1000, help="query count")
    parser.add_argument("--dims", type=int, default=7, help="embedding dimension")
    parser.add_argument("--horizons", type=int, default=10)
    parser.add_argument("--neighbors", type=int, default=8)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    lib, fut, tlib, q, tq = make_workload(
        args.library, args.queries, args.dims, args.horizons
    )
    kw = dict(k=args.neighbors, theiler=4, mode=0)

    ref = panel_forecasts(lib, fut, tlib, q, tq, force_numpy=True, **kw)
    t_np = best_time(
        lambda: panel_forecasts(lib, fut, tlib, q, tq, force_numpy=True, **kw),
        args.repeats,
    )
    print(f"numpy fallback : {t_np * 1000:9.2f} ms")

    if HAVE_NUMBA:
        out = panel_forecasts(lib, fut, tlib, q, tq, **kw)  # includes compile on first call
        t_nb = best_time(lambda: panel_forecasts(lib, fut, tlib, q, tq, **kw), args.repeats)
        same = (np.isnan(out) == np.isnan(ref)).all()
        diff = float(np.nanmax(np.abs(out - ref))) if np.isfinite(ref).any() else 0.0
        assert same and diff < 1e-12, f"paths disagree: masks {same}, max diff {diff}"
        print(f"numba kernel   : {t_nb * 1000:9.2f} ms")
        print(f"speedup        : {t_np / t_nb:9.1f}x  (results agree to {diff:.1e})")
    else:
        print("numba not importable; only the fallback was timed")


if __name__ == "__main__":
    main()
