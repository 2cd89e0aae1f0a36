"""Two-step forecast combination over diverse embedding pools.

Step 1 runs one evolution-strategy optimization per contiguous training split
and keeps, from each Hall of Fame, the best codes that stay Hamming-distant
from everything already accepted; each accepted code is paired with every
configured filter. Step 2 ranks the members per horizon by in-sample error,
averages the top k with a running-mean recursion, and picks the k minimizing
the in-sample squared error of the combined forecast. Test-time forecasts
average exactly those top-k members against the training library.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .core import EmbeddingCode, FilterSpec, ForecastPanel, TimeSeriesSet
from .errors import EmptyGrid, OutOfHistory, PoolUnderfullWarning
from .evolve import EsConfig, FitnessEvaluator, make_splits, run_es, select_diverse
from .predictor import AnalogueConfig, in_sample_panel, test_panel


@dataclass
class PoolMember:
    code: EmbeddingCode
    filt: FilterSpec
    split_id: int
    hof_rank: int

    @property
    def rho(self) -> float | None:
        return self.filt.rho


@dataclass
class EmbeddingPool:
    """K*L*M (or fewer) members: accepted codes crossed with the filter bank."""

    members: list[PoolMember]
    codes: list[EmbeddingCode]
    expected_codes: int
    es_traces: list[list[float]]

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def underfull(self) -> bool:
        return len(self.codes) < self.expected_codes


def build_pool(
    series: TimeSeriesSet,
    lag_budget: int,
    k_splits: int,
    m_per_split: int,
    theta: int,
    filters: list[FilterSpec],
    es_cfg: EsConfig,
    horizons,
    cfg: AnalogueConfig,
    evaluator: FitnessEvaluator | None = None,
) -> EmbeddingPool:
    """Step 1: K evolution runs, Hamming-diverse picks, filter attachment.

    The optimizations run on the standardized (but temporally unfiltered)
    series; accepted codes are then paired with all L filters. The diversity
    constraint threads through splits: each candidate must clear ``theta``
    against every previously accepted code. Deterministic for fixed seeds
    (per-split seeds derive from ``es_cfg.rng_seed``).
    """
    if evaluator is None:
        evaluator = FitnessEvaluator(series, FilterSpec.standardize(series), horizons, cfg)
    splits = make_splits(series.train_indices, k_splits)
    child_seeds = np.random.SeedSequence(es_cfg.rng_seed).spawn(len(splits))
    accepted: list[EmbeddingCode] = []
    members: list[PoolMember] = []
    traces: list[list[float]] = []
    for split, child in zip(splits, child_seeds):
        split_cfg = replace(es_cfg, rng_seed=int(child.generate_state(1, np.uint64)[0]))
        hof = run_es(
            split_cfg,
            series.n,
            lag_budget,
            series.target_index,
            evaluator.split_evaluator(split),
        )
        traces.append(list(hof.best_trace))
        rank_of = {code.key(): r for r, (code, _) in enumerate(hof.sorted_entries())}
        picks = select_diverse(hof, m_per_split, theta, existing=accepted)
        for code in picks:
            accepted.append(code)
            for filt in filters:
                members.append(
                    PoolMember(code=code, filt=filt, split_id=split.split_id, hof_rank=rank_of[code.key()])
                )
    expected = k_splits * m_per_split
    pool = EmbeddingPool(
        members=members, codes=accepted, expected_codes=expected, es_traces=traces
    )
    if pool.underfull:
        warnings.warn(
            f"diversity pruning kept {len(accepted)} of {expected} codes",
            PoolUnderfullWarning,
        )
    return pool


def member_panels(
    pool: EmbeddingPool,
    series: TimeSeriesSet,
    horizons,
    cfg: AnalogueConfig,
) -> list[ForecastPanel]:
    """In-sample panels for every pool member, reusing one filtered view per filter."""
    fz_cache: dict[int, object] = {}
    panels = []
    for member in pool.members:
        fz = fz_cache.get(id(member.filt))
        if fz is None:
            fz = member.filt.apply(series)
            fz_cache[id(member.filt)] = fz
        panels.append(in_sample_panel(series, member.code, member.filt, horizons, cfg, fz=fz))
    return panels


@dataclass
class EnsembleSelection:
    """Per-horizon ranking, chosen combination count, and error curve."""

    horizons: tuple[int, ...]
    ranking: np.ndarray  # (n_horizons, n_members) member ids, best first
    k_hat: np.ndarray  # (n_horizons,)
    err_curves: np.ndarray  # (n_horizons, n_members) combined squared error vs k

    def top_members(self, p: int) -> np.ndarray:
        i = self.horizons.index(p)
        return self.ranking[i, : self.k_hat[i]]


def common_grid(panels: list[ForecastPanel], p: int) -> np.ndarray:
    """Origins where every member both forecasts and can be scored at horizon p."""
    col = panels[0].horizon_column(p)
    mask = panels[0].scored[:, col].copy()
    for panel in panels[1:]:
        mask &= panel.scored[:, col]
    return np.flatnonzero(mask)


def rank_members(panels: list[ForecastPanel], truth: np.ndarray, p: int) -> np.ndarray:
    """Member ids sorted by ascending mean squared in-sample error at horizon p.

    All panels are first intersected to their common valid grid; ties keep the
    smaller member id. Raises :class:`EmptyGrid` when no origin is shared.
    """
    origins = common_grid(panels, p)
    if origins.size == 0:
        raise EmptyGrid(f"no common in-sample origin at horizon {p}")
    col = panels[0].horizon_column(p)
    target = truth[origins + p]
    mse = np.array(
        [np.mean((panel.values[origins, col] - target) ** 2) for panel in panels]
    )
    return np.argsort(mse, kind="stable")


def combine_recursive(forecasts, k: int):
    """Running-mean combination of the first k ranked forecasts.

    ``forecasts`` is ranked best-first along axis 0; Y_1 is the top forecast
    and Y_{j+1} = (j * Y_j + f_{j+1}) / (j + 1), which equals the arithmetic
    mean of the top j+1.
    """
    F = np.asarray(forecasts, dtype=np.float64)
    if not 1 <= k <= F.shape[0]:
        raise ValueError(f"k={k} outside [1, {F.shape[0]}]")
    Y = np.array(F[0], dtype=np.float64, copy=True)
    for j in range(1, k):
        Y = (j * Y + F[j]) / (j + 1)
    return Y


def combined_curve(forecasts) -> np.ndarray:
    """All Y_k stacked: row k-1 is the running mean of the top k forecasts."""
    F = np.asarray(forecasts, dtype=np.float64)
    out = np.empty_like(F)
    out[0] = F[0]
    for j in range(1, F.shape[0]):
        out[j] = (j * out[j - 1] + F[j]) / (j + 1)
    return out


def select_k_hat(ranked_forecasts, truth_values) -> tuple[int, np.ndarray]:
    """Combination count minimizing in-sample squared error, with the full curve.

    ``ranked_forecasts`` has shape (n_members, n_origins), best member first;
    ``truth_values`` the matching true futures. Ties go to the smallest k.
    """
    F = np.asarray(ranked_forecasts, dtype=np.float64)
    if F.ndim != 2 or F.shape[1] == 0:
        raise EmptyGrid("no origins to score the combination on")
    curve = combined_curve(F)
    err = ((curve - truth_values[None, :]) ** 2).sum(axis=1)
    return int(np.argmin(err)) + 1, err


def build_selection(
    panels: list[ForecastPanel],
    series: TimeSeriesSet,
    horizons,
) -> EnsembleSelection:
    """Step 2 over in-sample panels: rank, combine, and pick k per horizon."""
    horizons = tuple(int(p) for p in horizons)
    y = series.target_values
    n_members = len(panels)
    ranking = np.empty((len(horizons), n_members), dtype=np.int64)
    k_hat = np.empty(len(horizons), dtype=np.int64)
    curves = np.empty((len(horizons), n_members))
    for i, p in enumerate(horizons):
        order = rank_members(panels, y, p)
        origins = common_grid(panels, p)
        col = panels[0].horizon_column(p)
        F = np.stack([panels[m].values[origins, col] for m in order])
        k, err = select_k_hat(F, y[origins + p])
        ranking[i] = order
        k_hat[i] = k
        curves[i] = err
    return EnsembleSelection(horizons=horizons, ranking=ranking, k_hat=k_hat, err_curves=curves)


def forecast_test_panel(
    pool: EmbeddingPool,
    selection: EnsembleSelection,
    series: TimeSeriesSet,
    cfg: AnalogueConfig,
) -> ForecastPanel:
    """Combined test-period forecasts: per horizon, the mean of the top k members.

    Only members appearing in some horizon's top k are forecast at all; the
    neighbor library stays the training library.
    """
    horizons = selection.horizons
    needed = sorted({int(m) for p in horizons for m in selection.top_members(p)})
    fz_cache: dict[int, object] = {}
    member_tests: dict[int, ForecastPanel] = {}
    for m in needed:
        member = pool.members[m]
        fz = fz_cache.get(id(member.filt))
        if fz is None:
            fz = member.filt.apply(series)
            fz_cache[id(member.filt)] = fz
        member_tests[m] = test_panel(series, member.code, member.filt, horizons, cfg, fz=fz)
    T = series.length
    values = np.full((T, len(horizons)), np.nan)
    scored = np.zeros((T, len(horizons)), dtype=bool)
    for i, p in enumerate(horizons):
        ids = selection.top_members(p)
        stack = np.stack([member_tests[int(m)].values[:, i] for m in ids])
        ok = np.isfinite(stack).all(axis=0)
        values[ok, i] = combine_recursive(stack[:, ok], len(ids))
        tp_ok = ok & (np.arange(T) + p < T)
        scored[:, i] = tp_ok
    return ForecastPanel(values=values, horizons=horizons, scored=scored)


def forecast_test(
    pool: EmbeddingPool,
    selection: EnsembleSelection,
    series: TimeSeriesSet,
    t: int,
    p: int,
    cfg: AnalogueConfig,
) -> float:
    """Combined forecast at one test origin and horizon."""
    if t not in set(series.test_indices.tolist()):
        raise OutOfHistory(f"t={t} is not a test origin")
    panel = forecast_test_panel(pool, selection, series, cfg)
    value = panel.value(t, p)
    if np.isnan(value):
        raise OutOfHistory(f"no valid combined forecast at t={t}, p={p}")
    return value


@dataclass
class EmbeddingProfile:
    """Which variables, filters, and dimensions the chosen members use per horizon."""

    horizons: tuple[int, ...]
    variable_names: list[str]
    proportions: np.ndarray  # (n_variables, n_horizons), columns sum to 1
    mean_rho: np.ndarray  # (n_horizons,)
    mean_dimension: np.ndarray  # (n_horizons,)


def profile(pool: EmbeddingPool, selection: EnsembleSelection, series: TimeSeriesSet) -> EmbeddingProfile:
    """Embedding proportions and mean (rho, dimension) over the top-k members.

    A variable counts once per member when any of its lags is embedded; the
    per-horizon proportions are normalized to sum to one.
    """
    horizons = selection.horizons
    n = series.n
    props = np.zeros((n, len(horizons)))
    mean_rho = np.full(len(horizons), np.nan)
    mean_dim = np.empty(len(horizons))
    for i, p in enumerate(horizons):
        ids = selection.top_members(p)
        counts = np.zeros(n)
        dims = []
        rhos = []
        for m in ids:
            member = pool.members[int(m)]
            counts += member.code.variables()
            dims.append(member.code.dimension)
            if member.rho is not None:
                rhos.append(member.rho)
        props[:, i] = counts / counts.sum()
        mean_dim[i] = float(np.mean(dims))
        if rhos:
            mean_rho[i] = float(np.mean(rhos))
    return EmbeddingProfile(
        horizons=horizons,
        variable_names=list(series.variable_names),
        proportions=props,
        mean_rho=mean_rho,
        mean_dimension=mean_dim,
    )
