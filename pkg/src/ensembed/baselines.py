"""Comparison frameworks: multiview embedding, randomly-distributed-embedding
aggregation, and the single best evolved embedding.

All three share the analogue predictor and the standardized identity filter so
performance differences come from embedding selection alone.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb, floor, sqrt

import numpy as np

from .core import EmbeddingCode, FilterSpec, ForecastPanel, TimeSeriesSet
from .ensemble import combine_recursive, rank_members
from .errors import InsufficientVariables, ValidationError
from .evolve import EsConfig, FitnessEvaluator, TrainSplit, run_es
from .predictor import AnalogueConfig, in_sample_panel, test_panel


@dataclass
class BaselineConfig:
    """Candidate-embedding settings for the MVE and RDE schemes.

    ``candidate_count`` caps random sampling; when the full candidate space is
    no larger, it is enumerated instead. ``nondelay`` restricts codes to lag 0
    (the RDE family).
    """

    dimension: int
    max_lag: int
    candidate_count: int
    rng_seed: int = 0
    nondelay: bool = False

    def __post_init__(self):
        if self.dimension < 1:
            raise ValidationError("embedding dimension must be >= 1")
        if self.candidate_count < 1:
            raise ValidationError("candidate_count must be >= 1")


@dataclass
class BaselineResult:
    """Combined test forecasts plus the members that produced them."""

    name: str
    panel: ForecastPanel
    combine_counts: np.ndarray  # members averaged per horizon
    member_ids: list[np.ndarray]  # per horizon, candidate ids averaged
    codes: list[EmbeddingCode]  # full candidate list (SBE: the single winner)


def sample_candidate_codes(
    n: int,
    l: int,
    dimension: int,
    count: int,
    target: int,
    rng: np.random.Generator,
    nondelay: bool = False,
) -> list[EmbeddingCode]:
    """Distinct codes of exact dimension, target lag-0 always included.

    Enumerates the whole space when it has at most ``count`` members, else
    samples without replacement.
    """
    if nondelay:
        if n < dimension:
            raise InsufficientVariables(f"{n} variables cannot host dimension {dimension}")
        free = [(v, 0) for v in range(n) if v != target]
    else:
        free = [(v, lag) for v in range(n) for lag in range(l) if (v, lag) != (target, 0)]
    pick = dimension - 1
    if pick > len(free):
        raise InsufficientVariables(
            f"dimension {dimension} exceeds {len(free) + 1} available coordinates"
        )
    total = comb(len(free), pick)
    codes = []
    if total <= count:
        for combo in combinations(range(len(free)), pick):
            coords = [(target, 0)] + [free[i] for i in combo]
            codes.append(EmbeddingCode.from_coords(coords, n, l))
        return codes
    seen = set()
    while len(codes) < count:
        combo = tuple(sorted(rng.choice(len(free), size=pick, replace=False).tolist()))
        if combo in seen:
            continue
        seen.add(combo)
        coords = [(target, 0)] + [free[i] for i in combo]
        codes.append(EmbeddingCode.from_coords(coords, n, l))
    return codes


def _combined_candidate_forecast(
    series: TimeSeriesSet,
    codes: list[EmbeddingCode],
    horizons,
    cfg: AnalogueConfig,
    n_combine,
    name: str,
) -> BaselineResult:
    """Rank candidates per horizon in sample, average the top ``n_combine`` at test time."""
    horizons = tuple(int(p) for p in horizons)
    filt = FilterSpec.standardize(series)
    fz = filt.apply(series)
    panels = [in_sample_panel(series, code, filt, horizons, cfg, fz=fz) for code in codes]
    y = series.target_values
    per_horizon_ids = []
    counts = np.empty(len(horizons), dtype=np.int64)
    for i, p in enumerate(horizons):
        order = rank_members(panels, y, p)
        k = n_combine if isinstance(n_combine, int) else n_combine(len(codes))
        k = max(1, min(k, len(codes)))
        per_horizon_ids.append(order[:k])
        counts[i] = k
    needed = sorted({int(m) for ids in per_horizon_ids for m in ids})
    tests = {
        m: test_panel(series, codes[m], filt, horizons, cfg, fz=fz) for m in needed
    }
    T = series.length
    values = np.full((T, len(horizons)), np.nan)
    scored = np.zeros((T, len(horizons)), dtype=bool)
    for i, p in enumerate(horizons):
        stack = np.stack([tests[int(m)].values[:, i] for m in per_horizon_ids[i]])
        ok = np.isfinite(stack).all(axis=0)
        values[ok, i] = combine_recursive(stack[:, ok], stack.shape[0])
        scored[:, i] = ok & (np.arange(T) + p < T)
    panel = ForecastPanel(values=values, horizons=horizons, scored=scored)
    return BaselineResult(
        name=name,
        panel=panel,
        combine_counts=counts,
        member_ids=per_horizon_ids,
        codes=codes,
    )


def mve_forecast(
    series: TimeSeriesSet,
    cfg: BaselineConfig,
    horizons,
    analogue_cfg: AnalogueConfig,
) -> BaselineResult:
    """Multiview embedding: average the top sqrt(#candidates) fixed-dimension codes."""
    rng = np.random.default_rng(cfg.rng_seed)
    codes = sample_candidate_codes(
        series.n, cfg.max_lag, cfg.dimension, cfg.candidate_count, series.target_index, rng
    )
    return _combined_candidate_forecast(
        series, codes, horizons, analogue_cfg,
        n_combine=lambda m: max(1, floor(sqrt(m))),
        name="mve",
    )


def rde_forecast(
    series: TimeSeriesSet,
    cfg: BaselineConfig,
    horizons,
    analogue_cfg: AnalogueConfig,
    combine_count: int | None = None,
) -> BaselineResult:
    """Nondelay-embedding aggregation with a fixed combination count (default E)."""
    rng = np.random.default_rng(cfg.rng_seed)
    codes = sample_candidate_codes(
        series.n,
        max(cfg.max_lag, 1),
        cfg.dimension,
        cfg.candidate_count,
        series.target_index,
        rng,
        nondelay=True,
    )
    s = combine_count if combine_count is not None else cfg.dimension
    return _combined_candidate_forecast(
        series, codes, horizons, analogue_cfg, n_combine=s, name="rde"
    )


def sbe_forecast(
    series: TimeSeriesSet,
    lag_budget: int,
    es_cfg: EsConfig,
    horizons,
    analogue_cfg: AnalogueConfig,
    evaluator: FitnessEvaluator | None = None,
) -> BaselineResult:
    """Single best embedding: one evolution run on the whole training period."""
    horizons = tuple(int(p) for p in horizons)
    if evaluator is None:
        evaluator = FitnessEvaluator(
            series, FilterSpec.standardize(series), horizons, analogue_cfg
        )
    split = TrainSplit(split_id=1, indices=series.train_indices)
    hof = run_es(
        es_cfg,
        series.n,
        lag_budget,
        series.target_index,
        evaluator.split_evaluator(split),
    )
    best_code, _ = hof.best()
    panel = test_panel(series, best_code, evaluator.filt, horizons, analogue_cfg)
    counts = np.ones(len(horizons), dtype=np.int64)
    return BaselineResult(
        name="sbe",
        panel=panel,
        combine_counts=counts,
        member_ids=[np.array([0])] * len(horizons),
        codes=[best_code],
    )
