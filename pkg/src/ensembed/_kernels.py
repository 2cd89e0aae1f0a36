"""Neighbor-search forecast kernels, the package's hot inner loop.

Each evolution-strategy fitness call evaluates thousands of analogue forecasts,
so the query -> k-nearest -> weighted-average pass is compiled with numba by
default. Set ``ENSEMBED_DISABLE_NUMBA=1`` to force the pure-numpy fallback
(same results, slower); ``benchmarks/bench_kernels.py`` compares the two.

Kernel contract, shared by both paths
-------------------------------------
Given a library of delay vectors ``lib`` (rows ascending in time ``tlib``),
per-horizon future targets ``fut`` (NaN where a point has no future), queries
and their times, return the (n_queries, n_horizons) forecast matrix where
entry (i, p) is the weighted average of the futures of the ``k`` nearest
candidates:

* candidates exclude library points with ``|tlib - tq[i]| <= theiler``
  (theiler 0 keeps leave-one-out semantics for in-sample queries) and points
  without a horizon-p future;
* ties in distance resolve to the smaller time index;
* if the nearest distance is exactly zero the forecast is the plain mean of
  the zero-distance candidates' futures;
* otherwise weights follow ``mode``: 0 inverse squared distance, 1 squared
  distance, 2 uniform;
* NaN where no candidate remains.

Internally the library is consumed column-major and future-validity masks
that form a time prefix (the usual contiguous-training case) skip the NaN
checks entirely.
"""
from __future__ import annotations

import os

import numpy as np

WEIGHT_MODES = {"inverse-square": 0, "literal-square": 1, "uniform": 2}

try:
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency but stay importable
    HAVE_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


def _env_disabled() -> bool:
    return os.environ.get("ENSEMBED_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}


NUMBA_ENABLED = HAVE_NUMBA and not _env_disabled()


def _panel_forecasts_impl(libT, futT, tlib, queries, tq, k, theiler, mode, prefix, out):
    n_dim, m = libT.shape
    n_hor = futT.shape[0]
    for i in prange(queries.shape[0]):
        d2 = np.zeros(m)
        for e in range(n_dim):
            qe = queries[i, e]
            col = libT[e]
            for j in range(m):
                diff = col[j] - qe
                d2[j] += diff * diff
        # Theiler exclusion band: tlib is ascending, so it is one index range.
        lo = np.int64(0)
        hi = np.int64(m)
        val = tq[i] - theiler
        a, b = 0, m
        while a < b:
            mid = (a + b) // 2
            if tlib[mid] < val:
                a = mid + 1
            else:
                b = mid
        lo = a
        val = tq[i] + theiler
        a, b = 0, m
        while a < b:
            mid = (a + b) // 2
            if tlib[mid] <= val:
                a = mid + 1
            else:
                b = mid
        hi = a
        best_d = np.empty(k)
        best_j = np.empty(k, dtype=np.int64)
        for p in range(n_hor):
            cnt = prefix[p]
            general = cnt < 0
            limit = m if general else cnt
            fut_p = futT[p]
            nsel = 0
            for seg in range(2):
                if seg == 0:
                    start = 0
                    stop = lo if lo < limit else limit
                else:
                    start = lo if hi < lo else hi
                    stop = limit
                for j in range(start, stop):
                    if general and np.isnan(fut_p[j]):
                        continue
                    dj = d2[j]
                    if nsel < k:
                        pos = nsel
                        nsel += 1
                    elif dj < best_d[k - 1]:
                        pos = k - 1
                    else:
                        continue
                    while pos > 0 and best_d[pos - 1] > dj:
                        best_d[pos] = best_d[pos - 1]
                        best_j[pos] = best_j[pos - 1]
                        pos -= 1
                    best_d[pos] = dj
                    best_j[pos] = j
            if nsel == 0:
                out[i, p] = np.nan
                continue
            if best_d[0] == 0.0:
                total = 0.0
                count = 0
                for a_ in range(nsel):
                    if best_d[a_] == 0.0:
                        total += fut_p[best_j[a_]]
                        count += 1
                out[i, p] = total / count
            elif mode == 2:
                total = 0.0
                for a_ in range(nsel):
                    total += fut_p[best_j[a_]]
                out[i, p] = total / nsel
            else:
                wsum = 0.0
                total = 0.0
                for a_ in range(nsel):
                    w = 1.0 / best_d[a_] if mode == 0 else best_d[a_]
                    wsum += w
                    total += w * fut_p[best_j[a_]]
                out[i, p] = total / wsum


if HAVE_NUMBA:
    _panel_forecasts_numba = njit(cache=True, parallel=True)(_panel_forecasts_impl)


def _panel_forecasts_numpy(libT, futT, tlib, queries, tq, k, theiler, mode, prefix, out):
    m = libT.shape[1]
    for i in range(queries.shape[0]):
        d2 = np.zeros(m)
        for e in range(libT.shape[0]):
            diff = libT[e] - queries[i, e]
            d2 += diff * diff
        lo = int(np.searchsorted(tlib, tq[i] - theiler, side="left"))
        hi = int(np.searchsorted(tlib, tq[i] + theiler, side="right"))
        d2[lo:hi] = np.inf
        order = np.argsort(d2, kind="stable")  # stable: ties keep smaller time first
        usable = np.isfinite(d2[order])
        for p in range(futT.shape[0]):
            cnt = prefix[p]
            if cnt < 0:
                ok = usable & np.isfinite(futT[p][order])
            else:
                ok = usable & (order < cnt)
            sel = order[ok][:k]
            if sel.size == 0:
                out[i, p] = np.nan
                continue
            ds = d2[sel]
            fs = futT[p][sel]
            if ds[0] == 0.0:
                out[i, p] = fs[ds == 0.0].mean()
            elif mode == 2:
                out[i, p] = fs.mean()
            else:
                w = 1.0 / ds if mode == 0 else ds
                out[i, p] = (w * fs).sum() / w.sum()


def _prefix_counts(fut: np.ndarray) -> np.ndarray:
    """Per horizon: the count of valid futures when they form a time prefix, else -1."""
    finite = np.isfinite(fut)
    counts = finite.sum(axis=0)
    prefix = np.empty(fut.shape[1], dtype=np.int64)
    for p in range(fut.shape[1]):
        c = int(counts[p])
        prefix[p] = c if bool(finite[:c, p].all()) else -1
    return prefix


def panel_forecasts(
    lib: np.ndarray,
    fut: np.ndarray,
    tlib: np.ndarray,
    queries: np.ndarray,
    tq: np.ndarray,
    k: int,
    theiler: int = 0,
    mode: int = 0,
    force_numpy: bool = False,
) -> np.ndarray:
    """Analogue forecasts for every (query, horizon) pair; see module docstring.

    Returns an (n_queries, n_horizons) float matrix, NaN where undefined.
    """
    lib = np.asarray(lib, dtype=np.float64)
    fut = np.asarray(fut, dtype=np.float64)
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    tlib = np.ascontiguousarray(tlib, dtype=np.int64)
    tq = np.ascontiguousarray(tq, dtype=np.int64)
    if k < 1:
        raise ValueError("k must be >= 1")
    if tlib.size > 1 and np.any(np.diff(tlib) <= 0):
        raise ValueError("library times must be strictly ascending")
    out = np.full((queries.shape[0], fut.shape[1]), np.nan)
    if lib.shape[0] == 0 or queries.shape[0] == 0:
        return out
    libT = np.ascontiguousarray(lib.T)
    futT = np.ascontiguousarray(fut.T)
    prefix = _prefix_counts(fut)
    if NUMBA_ENABLED and not force_numpy:
        _panel_forecasts_numba(libT, futT, tlib, queries, tq, k, theiler, mode, prefix, out)
    else:
        _panel_forecasts_numpy(libT, futT, tlib, queries, tq, k, theiler, mode, prefix, out)
    return out
