"""Neighbor libraries over delay vectors and the weighted method-of-analogues map.

A library holds the delay vectors of every training time whose full lag and
filter support sits inside the training partition, together with the filtered
target's future value at each horizon. Forecasting a query point averages the
futures of its nearest stored neighbors; in-sample forecasts exclude the query
time itself from the candidates (leave-one-out).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import (
    DelayVector,
    EmbeddingCode,
    FilteredSeries,
    FilterSpec,
    ForecastPanel,
    TimeSeriesSet,
    delay_matrix,
    restore_panel,
)
from .errors import EmptyLibrary, MissingFuture, NoValidSamples, ValidationError


@dataclass(frozen=True)
class AnalogueConfig:
    """Neighbor-forecast settings.

    ``neighbor_count`` of None means one more neighbor than the embedding
    dimension of the code in use. ``theiler`` widens the exclusion band around
    an in-sample query from the query time alone (0) to ``|t' - t| <= theiler``.
    ``exclusion`` lists explicit times to drop from the candidate set.
    """

    neighbor_count: int | None = None
    weighting: str = "inverse-square"
    theiler: int = 0
    exclusion: frozenset = frozenset()

    def __post_init__(self):
        if self.weighting not in _kernels.WEIGHT_MODES:
            raise ValidationError(f"unknown weighting mode {self.weighting!r}")
        if self.neighbor_count is not None and self.neighbor_count < 1:
            raise ValidationError("neighbor_count must be >= 1")
        if self.theiler < 0:
            raise ValidationError("theiler window must be >= 0")

    def resolve_k(self, dimension: int) -> int:
        return self.neighbor_count if self.neighbor_count is not None else dimension + 1

    @property
    def mode(self) -> int:
        return _kernels.WEIGHT_MODES[self.weighting]


@dataclass
class NeighborLibrary:
    """Delay vectors of valid training times plus their per-horizon futures.

    ``futures[j, i]`` is the filtered target ``horizons[i]`` steps after
    ``times[j]``, NaN when that future leaves the training partition.
    """

    points: np.ndarray
    times: np.ndarray
    futures: np.ndarray
    horizons: tuple[int, ...]
    coords: tuple[tuple[int, int], ...]

    @property
    def size(self) -> int:
        return self.times.size


def build_library(fz: FilteredSeries, code: EmbeddingCode, horizons) -> NeighborLibrary:
    """Collect every training time with a valid delay vector and its futures."""
    horizons = tuple(int(p) for p in horizons)
    V, _ = delay_matrix(fz.values, code)
    times = np.flatnonzero(_query_mask(fz.valid_train, code))
    zf = fz.values[fz.target_index]
    T = fz.length
    futures = np.full((times.size, len(horizons)), np.nan)
    for i, p in enumerate(horizons):
        tp = times + p
        ok = tp < T
        ok[ok] = fz.valid_train[tp[ok]]
        futures[ok, i] = zf[tp[ok]]
    return NeighborLibrary(
        points=np.ascontiguousarray(V[times]),
        times=times,
        futures=futures,
        horizons=horizons,
        coords=tuple(code.coords()),
    )


def _query_mask(valid: np.ndarray, code: EmbeddingCode) -> np.ndarray:
    """Times where every selected lag lands on a valid sample."""
    T = valid.shape[0]
    mask = np.ones(T, dtype=bool)
    for lag in sorted({lag for _, lag in code.coords()}):
        if lag == 0:
            mask &= valid
        else:
            mask[lag:] &= valid[:-lag]
            mask[:lag] = False
    return mask


def knn_query(lib: NeighborLibrary, q: DelayVector, cfg: AnalogueConfig):
    """Exact k-nearest search. Returns [(time, euclidean distance), ...].

    Ties in distance resolve to the smaller time index. Raises
    :class:`EmptyLibrary` when no candidate survives ``cfg.exclusion``.
    """
    if q.dimension != lib.points.shape[1]:
        raise ValidationError(
            f"query dimension {q.dimension} != library dimension {lib.points.shape[1]}"
        )
    diff = lib.points - q.components
    d2 = (diff * diff).sum(axis=1)
    if cfg.exclusion:
        d2[np.isin(lib.times, np.fromiter(cfg.exclusion, dtype=np.int64))] = np.inf
    if not np.any(np.isfinite(d2)):
        raise EmptyLibrary("no neighbor candidates after exclusions")
    order = np.argsort(d2, kind="stable")
    order = order[np.isfinite(d2[order])]
    k = cfg.resolve_k(q.dimension)
    return [(int(lib.times[j]), float(np.sqrt(d2[j]))) for j in order[:k]]


def analogue_forecast(lib: NeighborLibrary, q: DelayVector, p: int, cfg: AnalogueConfig) -> float:
    """Weighted average of the nearest neighbors' horizon-``p`` futures."""
    if p not in lib.horizons:
        raise MissingFuture(f"horizon {p} not stored in library")
    col = lib.horizons.index(p)
    keep = np.ones(lib.size, dtype=bool)
    if cfg.exclusion:
        keep &= ~np.isin(lib.times, np.fromiter(cfg.exclusion, dtype=np.int64))
    if not keep.any():
        raise EmptyLibrary("no neighbor candidates after exclusions")
    out = _kernels.panel_forecasts(
        lib.points[keep],
        lib.futures[keep][:, [col]],
        lib.times[keep],
        q.components[None, :],
        np.array([np.iinfo(np.int64).min // 2], dtype=np.int64),
        k=cfg.resolve_k(q.dimension),
        theiler=cfg.theiler,
        mode=cfg.mode,
    )
    value = float(out[0, 0])
    if np.isnan(value):
        raise EmptyLibrary(f"no candidate has a {p}-step future")
    return value


def in_sample_panel(
    series: TimeSeriesSet,
    code: EmbeddingCode,
    filt: FilterSpec,
    horizons,
    cfg: AnalogueConfig,
    fz: FilteredSeries | None = None,
    origins: np.ndarray | None = None,
) -> ForecastPanel:
    """Leave-one-out forecasts over the training period, in original units.

    Every valid training time is forecast against a library spanning all
    other valid training times. Forecasts made on the filtered series are
    restored to original units before storage. Pass a precomputed ``fz`` to
    skip refiltering, and ``origins`` to forecast a subset of training times
    (the library is unaffected).
    """
    horizons = tuple(int(p) for p in horizons)
    if fz is None:
        fz = filt.apply(series)
    lib = build_library(fz, code, horizons)
    if lib.size == 0:
        raise NoValidSamples("no training time has a valid delay vector")
    if origins is None:
        queries = lib.points
        times = lib.times
    else:
        origins = np.asarray(origins, dtype=np.int64)
        mask = _query_mask(fz.valid_train, code)
        times = origins[mask[origins]]
        V, _ = delay_matrix(fz.values, code)
        queries = np.ascontiguousarray(V[times])
    zhat = _kernels.panel_forecasts(
        lib.points,
        lib.futures,
        lib.times,
        queries,
        times,
        k=cfg.resolve_k(code.dimension),
        theiler=cfg.theiler,
        mode=cfg.mode,
    )
    return _assemble_panel(series, filt, horizons, times, zhat, in_sample=True)


def test_panel(
    series: TimeSeriesSet,
    code: EmbeddingCode,
    filt: FilterSpec,
    horizons,
    cfg: AnalogueConfig,
    fz: FilteredSeries | None = None,
) -> ForecastPanel:
    """Forecasts at test origins against the training library only."""
    horizons = tuple(int(p) for p in horizons)
    if fz is None:
        fz = filt.apply(series)
    lib = build_library(fz, code, horizons)
    if lib.size == 0:
        raise NoValidSamples("no training time has a valid delay vector")
    origin_ok = _query_mask(fz.valid_obs, code)
    origins = series.test_indices[origin_ok[series.test_indices]]
    if origins.size == 0:
        raise NoValidSamples("no test origin has a valid delay vector")
    V, _ = delay_matrix(fz.values, code)
    zhat = _kernels.panel_forecasts(
        lib.points,
        lib.futures,
        lib.times,
        np.ascontiguousarray(V[origins]),
        origins,
        k=cfg.resolve_k(code.dimension),
        theiler=cfg.theiler,
        mode=cfg.mode,
    )
    return _assemble_panel(series, filt, horizons, origins, zhat, in_sample=False)


def _assemble_panel(series, filt, horizons, origins, zhat, in_sample):
    yhat = restore_panel(zhat, filt, series.target_index, series.target_values, origins)
    T = series.length
    values = np.full((T, len(horizons)), np.nan)
    values[origins] = yhat
    scored = np.zeros_like(values, dtype=bool)
    truth_ok = series.is_train() if in_sample else np.ones(T, dtype=bool)
    for i, p in enumerate(horizons):
        tp = origins + p
        ok = tp < T
        ok[ok] = truth_ok[tp[ok]]
        scored[origins[ok], i] = np.isfinite(values[origins[ok], i])
    return ForecastPanel(values=values, horizons=horizons, scored=scored)
