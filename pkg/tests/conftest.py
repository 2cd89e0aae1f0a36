"""Shared fixtures: small chaotic datasets and independent forecast oracles.

The naive oracle reimplements the analogue-forecast fitness with plain Python
loops and no shared kernels, so kernel/panel/fitness regressions cannot hide.
"""
import numpy as np
import pytest

import ensembed as eb


def make_series(values, target=0, names=None, train_len=None):
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[None, :]
    n, T = values.shape
    if names is None:
        names = [f"x{i}" for i in range(n)]
    if train_len is None:
        train_idx, test_idx = np.arange(T), np.empty(0, dtype=np.int64)
    else:
        train_idx, test_idx = np.arange(train_len), np.arange(train_len, T)
    return eb.TimeSeriesSet(
        values=values,
        variable_names=names,
        target_index=target,
        train_indices=train_idx,
        test_indices=test_idx,
    )


@pytest.fixture(scope="session")
def tiny_lorenz():
    """60-sample Lorenz'63 draw, x and y observed; the 8-code toy problem."""
    spec = eb.SimSpec(
        system="lorenz63", dt=0.001, record_stride=100, length=60,
        transient_discard=100, rng_seed=42,
    )
    base = eb.integrate_ode(spec)
    return eb.TimeSeriesSet(base.values[:2], ["x", "y"], 0)


def naive_analogue_fitness(bits, series, horizons, lag_budget):
    """Independent fitness oracle: pure-python brute force, inverse-square weights.

    Mirrors the contract: standardized identity filter, leave-one-out library
    over all training times, k = dimension + 1 neighbors, ties by smaller
    time, absolute errors summed over origins and horizons.
    """
    y = series.values
    n, T = y.shape
    f = series.target_index
    train = sorted(int(t) for t in series.train_indices)
    train_set = set(train)
    mu, sd = [], []
    for i in range(n):
        m = np.mean([y[i, t] for t in train])
        v = np.mean([(y[i, t] - m) ** 2 for t in train])
        mu.append(m)
        sd.append(np.sqrt(v) if v > 0 else 1.0)
    z = [[(y[i, t] - mu[i]) / sd[i] for t in range(T)] for i in range(n)]
    coords = [(idx // lag_budget, idx % lag_budget) for idx, b in enumerate(bits) if b]
    k = len(coords) + 1
    valid = [
        t for t in train
        if all(t - lag >= 0 and (t - lag) in train_set for _, lag in coords)
    ]
    total = 0.0
    for t in valid:
        qv = [z[var][t - lag] for var, lag in coords]
        for p in horizons:
            if t + p >= T or (t + p) not in train_set:
                continue
            cands = []
            for tp in valid:
                if tp == t or tp + p >= T or (tp + p) not in train_set:
                    continue
                d2 = sum((z[var][tp - lag] - q) ** 2 for (var, lag), q in zip(coords, qv))
                cands.append((d2, tp))
            cands.sort()
            sel = cands[:k]
            if not sel:
                continue
            if sel[0][0] == 0.0:
                futs = [z[f][tp + p] for d2, tp in sel if d2 == 0.0]
                zhat = sum(futs) / len(futs)
            else:
                ws = [1.0 / d2 for d2, _ in sel]
                zhat = sum(w * z[f][tp + p] for w, (_, tp) in zip(ws, sel)) / sum(ws)
            total += abs((sd[f] * zhat + mu[f]) - y[f, t + p])
    return total


TINY_HORIZONS = (1, 2, 3)


@pytest.fixture(scope="session")
def tiny_oracle(tiny_lorenz):
    """Brute-force fitness of every one of the 2^{nl-1} = 8 codes."""
    table = {}
    for free in range(8):
        bits = [1, (free >> 2) & 1, (free >> 1) & 1, free & 1]
        table[bytes(bits)] = naive_analogue_fitness(bits, tiny_lorenz, TINY_HORIZONS, 2)
    return table


@pytest.fixture(scope="session")
def small_l63_series():
    """Three-variable set (Lorenz'63 x, y + one random walk), 300 train / 60 test."""
    names, values = eb.generate_dataset(
        eb.DatasetSpec(kind="lorenz63", length=360, seed=5, n_system_vars=2, n_random_walks=1)
    )
    T = values.shape[1]
    return eb.TimeSeriesSet(
        values, names, 0, train_indices=np.arange(300), test_indices=np.arange(300, T)
    )


SMALL_HORIZONS = tuple(range(1, 6))


@pytest.fixture(scope="session")
def small_pipeline(small_l63_series):
    """Pool, panels, selection, and combined test panel on the small set."""
    series = small_l63_series
    acfg = eb.AnalogueConfig()
    filters = [eb.FilterSpec.fit(series, r) for r in (0.0, -0.5, -1.0)]
    es_cfg = eb.EsConfig(mu=8, lambda_=16, generations=4, population_size=20, rng_seed=11)
    pool = eb.build_pool(series, 3, 3, 2, 2, filters, es_cfg, SMALL_HORIZONS, acfg)
    panels = eb.member_panels(pool, series, SMALL_HORIZONS, acfg)
    selection = eb.build_selection(panels, series, SMALL_HORIZONS)
    combined = eb.forecast_test_panel(pool, selection, series, acfg)
    return series, pool, panels, selection, combined
