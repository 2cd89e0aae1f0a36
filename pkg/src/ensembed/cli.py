"""Command-line interface: generate datasets, run forecasts, sweep conditions.

Subcommands
-----------
generate   write a dataset CSV from the config's dataset block
forecast   run the two-step framework plus enabled baselines, emit reports
sweep      re-run forecast over an axis (data-length, noise-scale,
           variable-count) and replicate seeds, aggregate medians/quartiles
profile    run the training side only and emit embedding profiles

Exit codes: 0 success, 2 configuration/validation error, 1 runtime error.
Logs go to standard error; data products are files under the output directory.
"""
from __future__ import annotations

import csv
import json
import logging

import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from copy import deepcopy
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np
import yaml

from .baselines import BaselineConfig, BaselineResult, mve_forecast, rde_forecast, sbe_forecast
from .core import FilterSpec, ForecastPanel, TimeSeriesSet
from .dynamics import DatasetSpec, generate_dataset
from .ensemble import (
    EmbeddingPool,
    EmbeddingProfile,
    EnsembleSelection,
    build_pool,
    build_selection,
    forecast_test_panel,
    member_panels,
    profile as profile_pool,
)
from .errors import EnsembedError, MissingColumn, ParseError, ValidationError
from .evolve import EsConfig, FitnessEvaluator
from .predictor import AnalogueConfig

log = logging.getLogger("ensembed")


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

_ES_DEFAULTS = {
    "mu": 50,
    "lambda": 100,
    "generations": 10,
    "population": 100,
    "crossover_prob": 0.5,
    "bitflip_prob": None,
    "init_density": 0.15,
}

_POOL_DEFAULTS = {
    "splits": 10,
    "per_split": 3,
    "theta": 3,
    "filters": [0.0, -0.2, -0.4, -0.6, -0.8, -1.0],
}

_PREDICTOR_DEFAULTS = {"neighbors": None, "weighting": "inverse-square", "theiler": 0}


def load_config(path) -> dict:
    """Parse and normalize a YAML experiment config."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ValidationError(f"cannot parse config {path}: {exc}") from exc
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValidationError("config must be a mapping of keys to values")
    return normalize_config(raw)


def normalize_config(raw: dict) -> dict:
    """Fill defaults and validate ranges; raises ValidationError with the key path."""
    cfg = deepcopy(raw)
    dataset = cfg.get("dataset")
    if not isinstance(dataset, dict) or "kind" not in dataset:
        raise ValidationError("config needs a dataset block with a 'kind'")
    if dataset["kind"] == "csv":
        if "path" not in dataset:
            raise ValidationError("dataset.kind csv needs dataset.path")
    else:
        if "length" not in dataset:
            raise ValidationError("generator datasets need dataset.length")
        _require_int(dataset, "length", minimum=2, path="dataset.length")
    dataset.setdefault("seed", 0)
    dataset.setdefault("n_random_walks", 0)
    dataset.setdefault("noise_scale", 0.0)
    dataset.setdefault("params", {})
    if dataset["noise_scale"] < 0:
        raise ValidationError("dataset.noise_scale must be >= 0")

    if "target" not in cfg:
        raise ValidationError("config needs a target variable name")
    cfg["max_lag"] = _require_int(cfg, "max_lag", minimum=1, default=4, path="max_lag")
    cfg["horizons"] = _require_int(cfg, "horizons", minimum=1, default=10, path="horizons")

    split = cfg.get("split")
    if not isinstance(split, dict) or ("boundary" not in split and "test_rows" not in split):
        raise ValidationError("config needs a split block with 'boundary' or 'test_rows'")
    if "test_rows" in split:
        rows = split["test_rows"]
        if not rows or any(len(r) != 2 or r[0] >= r[1] for r in rows):
            raise ValidationError("split.test_rows must be nonempty [start, stop) pairs")

    pool = {**_POOL_DEFAULTS, **cfg.get("pool", {})}
    for key in ("splits", "per_split", "theta"):
        _require_int(pool, key, minimum=1 if key != "theta" else 0, path=f"pool.{key}")
    if not pool["filters"]:
        raise ValidationError("pool.filters must list at least one coefficient")
    cfg["pool"] = pool

    cfg["es"] = {**_ES_DEFAULTS, **cfg.get("es", {})}
    cfg["predictor"] = {**_PREDICTOR_DEFAULTS, **cfg.get("predictor", {})}
    cfg.setdefault("baselines", {})
    cfg.setdefault("seed", 0)
    cfg.setdefault("output", "runs/out")
    return cfg


def _require_int(block: dict, key: str, minimum: int, path: str, default=None):
    value = block.get(key, default)
    if value is None or isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{path} must be an integer")
    if value < minimum:
        raise ValidationError(f"{path} must be >= {minimum}")
    block[key] = value
    return value


def es_config_from(cfg: dict, seed: int) -> EsConfig:
    es = cfg["es"]
    return EsConfig(
        mu=es["mu"],
        lambda_=es["lambda"],
        generations=es["generations"],
        population_size=es["population"],
        bitflip_prob=es["bitflip_prob"],
        crossover_prob=es["crossover_prob"],
        init_density=es["init_density"],
        rng_seed=seed,
    )


def analogue_config_from(cfg: dict) -> AnalogueConfig:
    pred = cfg["predictor"]
    return AnalogueConfig(
        neighbor_count=pred["neighbors"],
        weighting=pred["weighting"],
        theiler=pred["theiler"],
    )


# ---------------------------------------------------------------------------
# Dataset assembly and CSV ingestion
# ---------------------------------------------------------------------------


def read_csv_matrix(path) -> tuple[list[str], np.ndarray]:
    """Canonical CSV: header of variable names, one row per time step."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path} is empty") from None
        names = [h.strip() for h in header]
        rows = []
        for r, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(names):
                raise ParseError(f"{path}:{r} has {len(row)} cells, expected {len(names)}", row=r)
            parsed = []
            for c, cell in enumerate(row, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: non-numeric cell at row {r}, column {c}: {cell!r}",
                        row=r,
                        col=c,
                    ) from None
            rows.append(parsed)
    if not rows:
        raise ParseError(f"{path} has a header but no data rows")
    return names, np.asarray(rows, dtype=np.float64).T


def ingest_csv(
    path,
    target: str,
    boundary: int | None = None,
    test_rows=None,
    sample_period: float = 1.0,
) -> TimeSeriesSet:
    """Load the canonical CSV format into an observation set.

    ``boundary`` makes every row from that index on a test row; ``test_rows``
    instead lists [start, stop) test ranges (supporting middle-period
    protocols). Raises :class:`MissingColumn` when the target is absent and
    :class:`ParseError` with row/column on malformed cells.
    """
    names, values = read_csv_matrix(path)
    if target not in names:
        raise MissingColumn(f"target column {target!r} not in header {names}")
    train_idx, test_idx = _partition(values.shape[1], boundary, test_rows)
    return TimeSeriesSet(
        values=values,
        variable_names=names,
        target_index=names.index(target),
        sample_period=sample_period,
        train_indices=train_idx,
        test_indices=test_idx,
    )


def _partition(T: int, boundary, test_rows):
    mask = np.zeros(T, dtype=bool)
    if test_rows is not None:
        for start, stop in test_rows:
            if not 0 <= start < stop <= T:
                raise ValidationError(f"test rows [{start}, {stop}) outside record of {T}")
            mask[start:stop] = True
    elif boundary is not None:
        if not 0 < boundary < T:
            raise ValidationError(f"split boundary {boundary} outside (0, {T})")
        mask[boundary:] = True
    else:
        raise ValidationError("need split.boundary or split.test_rows")
    return np.flatnonzero(~mask), np.flatnonzero(mask)


def series_from_config(cfg: dict, dataset_seed: int | None = None) -> TimeSeriesSet:
    """Build the observation set: generate or ingest, then partition."""
    dataset = cfg["dataset"]
    split = cfg["split"]
    target = str(cfg["target"])
    if dataset["kind"] == "csv":
        return ingest_csv(
            dataset["path"],
            target,
            boundary=split.get("boundary"),
            test_rows=split.get("test_rows"),
            sample_period=float(cfg.get("sample_period", 1.0)),
        )
    dspec = DatasetSpec(
        kind=dataset["kind"],
        length=dataset["length"],
        seed=dataset_seed if dataset_seed is not None else dataset["seed"],
        n_system_vars=dataset.get("n_system_vars"),
        n_random_walks=dataset["n_random_walks"],
        noise_scale=float(dataset["noise_scale"]),
        parameters=dataset["params"],
        dt=dataset.get("dt"),
        record_stride=dataset.get("record_stride"),
        transient_discard=dataset.get("transient_discard"),
    )
    names, values = generate_dataset(dspec)
    if target not in names:
        raise ValidationError(f"target column {target!r} not in generated variables {names}")
    train_idx, test_idx = _partition(
        values.shape[1], split.get("boundary"), split.get("test_rows")
    )
    return TimeSeriesSet(
        values=values,
        variable_names=names,
        target_index=names.index(target),
        sample_period=float(cfg.get("sample_period", 1.0)),
        train_indices=train_idx,
        test_indices=test_idx,
    )


# ---------------------------------------------------------------------------
# Forecast run
# ---------------------------------------------------------------------------


@dataclass
class ForecastRun:
    """Everything a single forecast command produces, pre-serialization."""

    config: dict
    series: TimeSeriesSet
    horizons: tuple[int, ...]
    pool: EmbeddingPool
    selection: EnsembleSelection
    profile: EmbeddingProfile
    combined: ForecastPanel
    baselines: dict[str, BaselineResult]
    eval_origins: np.ndarray
    rmse: dict[str, dict[int, float]]
    counts: dict[str, dict[int, int]]
    runtime_seconds: float


def _seed_streams(master: int, count: int) -> list[int]:
    children = np.random.SeedSequence(master).spawn(count)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def run_forecast(cfg: dict, series: TimeSeriesSet | None = None) -> ForecastRun:
    """Execute the full two-step framework plus enabled baselines.

    ``series`` may be supplied directly (tests, poisoning checks); otherwise
    it is built from the config. Deterministic given the config and seeds.
    """
    started = time.perf_counter()
    if series is None:
        series = series_from_config(cfg)
    horizons = tuple(range(1, cfg["horizons"] + 1))
    lag_budget = cfg["max_lag"]
    acfg = analogue_config_from(cfg)
    es_seed, mve_seed, rde_seed = _seed_streams(int(cfg["seed"]), 3)

    filters = [FilterSpec.fit(series, rho) for rho in cfg["pool"]["filters"]]
    evaluator = FitnessEvaluator(series, FilterSpec.standardize(series), horizons, acfg)
    log.info(
        "building pool: %d splits x %d codes x %d filters",
        cfg["pool"]["splits"],
        cfg["pool"]["per_split"],
        len(filters),
    )
    pool = build_pool(
        series,
        lag_budget,
        cfg["pool"]["splits"],
        cfg["pool"]["per_split"],
        cfg["pool"]["theta"],
        filters,
        es_config_from(cfg, es_seed),
        horizons,
        acfg,
        evaluator=evaluator,
    )
    log.info("pool of %d members (%d codes); ranking members", pool.size, len(pool.codes))
    panels = member_panels(pool, series, horizons, acfg)
    selection = build_selection(panels, series, horizons)
    prof = profile_pool(pool, selection, series)
    combined = forecast_test_panel(pool, selection, series, acfg)

    baselines: dict[str, BaselineResult] = {}
    bcfg = cfg["baselines"]
    if _enabled(bcfg, "mve"):
        log.info("running mve baseline")
        baselines["mve"] = mve_forecast(
            series,
            _baseline_config(bcfg["mve"], cfg, mve_seed),
            horizons,
            acfg,
        )
    if _enabled(bcfg, "rde"):
        log.info("running rde baseline")
        baselines["rde"] = rde_forecast(
            series,
            _baseline_config(bcfg["rde"], cfg, rde_seed, nondelay=True),
            horizons,
            acfg,
        )
    if _enabled(bcfg, "sbe"):
        log.info("running sbe baseline")
        baselines["sbe"] = sbe_forecast(
            series,
            lag_budget,
            es_config_from(cfg, es_seed),
            horizons,
            acfg,
            evaluator=evaluator,
        )

    eval_origins = _eval_origins(series, cfg)
    rmse: dict[str, dict[int, float]] = {}
    counts: dict[str, dict[int, int]] = {}
    y = series.target_values
    for name, panel in [("proposed", combined)] + [
        (n, r.panel) for n, r in baselines.items()
    ]:
        rmse[name], counts[name] = _panel_rmse(panel, y, horizons, eval_origins)
    runtime = time.perf_counter() - started
    return ForecastRun(
        config=cfg,
        series=series,
        horizons=horizons,
        pool=pool,
        selection=selection,
        profile=prof,
        combined=combined,
        baselines=baselines,
        eval_origins=eval_origins,
        rmse=rmse,
        counts=counts,
        runtime_seconds=runtime,
    )


def _enabled(block: dict, name: str) -> bool:
    sub = block.get(name)
    if sub is None:
        return False
    if isinstance(sub, bool):
        return sub
    return bool(sub.get("enabled", True))


def _baseline_config(sub, cfg: dict, seed: int, nondelay: bool = False) -> BaselineConfig:
    sub = sub if isinstance(sub, dict) else {}
    return BaselineConfig(
        dimension=int(sub.get("dimension", 4)),
        max_lag=int(sub.get("max_lag", cfg["max_lag"])),
        candidate_count=int(sub.get("candidates", 1000)),
        rng_seed=seed,
        nondelay=nondelay,
    )


def _eval_origins(series: TimeSeriesSet, cfg: dict) -> np.ndarray:
    origins = np.sort(series.test_indices)
    limit = cfg["split"].get("test_origins")
    if limit is not None:
        origins = origins[: int(limit)]
    return origins


def _panel_rmse(panel: ForecastPanel, y: np.ndarray, horizons, origins):
    rmse = {}
    counts = {}
    T = y.shape[0]
    for i, p in enumerate(horizons):
        ok = origins + p < T
        t = origins[ok]
        vals = panel.values[t, i]
        fin = np.isfinite(vals)
        if not fin.any():
            rmse[p] = float("nan")
            counts[p] = 0
            continue
        err = vals[fin] - y[t[fin] + p]
        rmse[p] = float(np.sqrt(np.mean(err**2)))
        counts[p] = int(fin.sum())
    return rmse, counts


# ---------------------------------------------------------------------------
# Output writers
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_dataset_csv(names, values: np.ndarray, path: Path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in values.T:
            writer.writerow([_fmt(v) for v in row])


def write_forecast_csv(run: ForecastRun, path: Path):
    """One row per (method, origin, horizon) with the paired truth when known."""
    y = run.series.target_values
    T = y.shape[0]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "origin", "horizon", "forecast", "truth"])
        for name, panel in [("proposed", run.combined)] + [
            (n, r.panel) for n, r in run.baselines.items()
        ]:
            for i, p in enumerate(run.horizons):
                for t in run.eval_origins:
                    v = panel.values[t, i]
                    if not np.isfinite(v):
                        continue
                    truth = _fmt(y[t + p]) if t + p < T else ""
                    writer.writerow([name, int(t), p, _fmt(v), truth])


def write_profile_csv(prof: EmbeddingProfile, out_dir: Path):
    with open(out_dir / "profile.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["horizon", "variable", "proportion"])
        for i, p in enumerate(prof.horizons):
            for v, name in enumerate(prof.variable_names):
                writer.writerow([p, name, _fmt(prof.proportions[v, i])])


def write_profile_summary_csv(run_profile, selection, out_dir: Path):
    with open(out_dir / "profile_summary.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["horizon", "k_hat", "mean_rho", "mean_dimension"])
        for i, p in enumerate(run_profile.horizons):
            writer.writerow(
                [
                    p,
                    int(selection.k_hat[i]),
                    _fmt(run_profile.mean_rho[i]),
                    _fmt(run_profile.mean_dimension[i]),
                ]
            )


def build_report(run: ForecastRun) -> dict:
    """Structured report: config echo, metrics, selection, profile, pool."""
    sel = run.selection
    prof = run.profile
    report = {
        "schema": "ensembed-report-v1",
        "config": run.config,
        "runtime_seconds": run.runtime_seconds,
        "n_variables": run.series.n,
        "n_train": int(run.series.train_indices.size),
        "n_eval_origins": int(run.eval_origins.size),
        "methods": {
            name: {
                "rmse": {str(p): run.rmse[name][p] for p in run.horizons},
                "count": {str(p): run.counts[name][p] for p in run.horizons},
            }
            for name in run.rmse
        },
        "selection": {
            "k_hat": {str(p): int(sel.k_hat[i]) for i, p in enumerate(run.horizons)},
            "err_curves": {
                str(p): [float(v) for v in sel.err_curves[i]]
                for i, p in enumerate(run.horizons)
            },
        },
        "pool": {
            "members": run.pool.size,
            "codes": len(run.pool.codes),
            "expected_codes": run.pool.expected_codes,
            "underfull": run.pool.underfull,
            "member_detail": [
                {
                    "code": "".join(str(int(b)) for b in m.code.bits),
                    "split": m.split_id,
                    "hof_rank": m.hof_rank,
                    "rho": m.rho,
                }
                for m in run.pool.members
            ],
        },
        "profile": {
            "variables": prof.variable_names,
            "proportions": {
                str(p): [float(v) for v in prof.proportions[:, i]]
                for i, p in enumerate(prof.horizons)
            },
            "mean_rho": {str(p): float(prof.mean_rho[i]) for i, p in enumerate(prof.horizons)},
            "mean_dimension": {
                str(p): float(prof.mean_dimension[i]) for i, p in enumerate(prof.horizons)
            },
        },
        "baselines": {
            name: {
                "combine_counts": [int(c) for c in r.combine_counts],
                "n_candidates": len(r.codes),
            }
            for name, r in run.baselines.items()
        },
    }
    return report


def write_forecast_outputs(run: ForecastRun, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    write_forecast_csv(run, out_dir / "forecasts.csv")
    write_profile_csv(run.profile, out_dir)
    write_profile_summary_csv(run.profile, run.selection, out_dir)
    with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(build_report(run), fh, indent=2, sort_keys=False)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

SWEEP_AXES = ("data-length", "noise-scale", "variable-count")


def apply_axis(cfg: dict, axis: str, value) -> dict:
    """Copy of the config with one sweep-axis value applied."""
    out = deepcopy(cfg)
    dataset = out["dataset"]
    if axis == "data-length":
        boundary = out["split"].get("boundary")
        if boundary is None:
            raise ValidationError("data-length sweeps need a split.boundary config")
        tail = dataset["length"] - boundary
        if tail < 1:
            raise ValidationError("dataset.length must exceed split.boundary")
        out["split"]["boundary"] = int(value)
        dataset["length"] = int(value) + tail
    elif axis == "noise-scale":
        dataset["noise_scale"] = float(value)
    elif axis == "variable-count":
        if dataset["kind"] != "lorenz96":
            raise ValidationError("variable-count sweeps support lorenz96 datasets only")
        total = int(value)
        n_rw = total // 2 if dataset.get("n_random_walks", 0) > 0 else 0
        dataset["params"] = {**dataset.get("params", {}), "dim": total}
        dataset["n_system_vars"] = total - n_rw
        dataset["n_random_walks"] = n_rw
    else:
        raise ValidationError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    return out


def _sweep_one(args):
    cfg, axis, value, seed, limit_threads = args
    if limit_threads:
        try:
            from numba import set_num_threads

            set_num_threads(1)
        except ImportError:
            pass
    sub = apply_axis(cfg, axis, value)
    sub["dataset"]["seed"] = int(seed)
    run = run_forecast(sub)
    rows = []
    for method in run.rmse:
        for p in run.horizons:
            rows.append(
                {
                    "axis": axis,
                    "value": value,
                    "seed": int(seed),
                    "method": method,
                    "horizon": p,
                    "rmse": run.rmse[method][p],
                    "count": run.counts[method][p],
                }
            )
    return rows


def run_sweep(cfg: dict, axis: str, values, seeds, workers: int, out_dir: Path) -> list[dict]:
    """Forecast per (value, seed), flushing raw rows as runs finish."""
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, axis, value, seed, workers > 1) for value in values for seed in seeds]
    rows: list[dict] = []
    runs_path = out_dir / "sweep_runs.csv"
    fieldnames = ["axis", "value", "seed", "method", "horizon", "rmse", "count"]
    with open(runs_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        fh.flush()
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = {pool.submit(_sweep_one, job): job for job in jobs}
                for fut in as_completed(futures):
                    batch = fut.result()
                    rows.extend(batch)
                    writer.writerows(batch)
                    fh.flush()
                    log.info("sweep point done: %s", futures[fut][2:4])
        else:
            for job in jobs:
                batch = _sweep_one(job)
                rows.extend(batch)
                writer.writerows(batch)
                fh.flush()
                log.info("sweep point done: value=%s seed=%s", job[2], job[3])
    _write_sweep_summary(rows, out_dir / "sweep_summary.csv")
    return rows


def _write_sweep_summary(rows: list[dict], path: Path):
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        key = (row["value"], row["method"], row["horizon"])
        groups.setdefault(key, []).append(row["rmse"])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["value", "method", "horizon", "median", "q25", "q75", "n_seeds"])
        for (value, method, horizon), vals in sorted(groups.items(), key=lambda kv: str(kv[0])):
            arr = np.asarray(vals)
            q25, med, q75 = np.percentile(arr, [25, 50, 75])
            writer.writerow(
                [value, method, horizon, _fmt(med), _fmt(q25), _fmt(q75), arr.size]
            )


# ---------------------------------------------------------------------------
# Click commands
# ---------------------------------------------------------------------------


def _setup_logging():
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
        datefmt="%H:%M:%S",
    )


def _guard(body) -> None:
    try:
        body()
    except ValidationError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except EnsembedError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


def _apply_workers(workers: int | None):
    if workers and workers > 0:
        try:
            from numba import set_num_threads

            set_num_threads(workers)
        except (ImportError, ValueError):
            pass


@click.group()
def main():
    """Ensemble forecasting of nonlinear time series via diverse delay embeddings."""
    _setup_logging()


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="YAML config")
@click.option("--seed", type=int, default=None, help="Override the dataset seed")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Output directory")
def generate(config_path, seed, out_dir):
    """Write the config's dataset as a canonical CSV (dataset.csv)."""

    def body():
        cfg = load_config(config_path)
        if cfg["dataset"]["kind"] == "csv":
            raise ValidationError("dataset.kind csv cannot be generated")
        if seed is not None:
            cfg["dataset"]["seed"] = seed
        out = Path(out_dir) if out_dir else Path(cfg["output"])
        out.mkdir(parents=True, exist_ok=True)
        series = series_from_config(cfg)
        path = out / "dataset.csv"
        write_dataset_csv(series.variable_names, series.values, path)
        click.echo(str(path))

    _guard(body)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="YAML config")
@click.option("--seed", type=int, default=None, help="Override the master run seed")
@click.option("--workers", type=int, default=None, help="Kernel thread count")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Output directory")
def forecast(config_path, seed, workers, out_dir):
    """Run the two-step framework plus enabled baselines; write reports."""

    def body():
        cfg = load_config(config_path)
        if seed is not None:
            cfg["seed"] = seed
        _apply_workers(workers)
        run = run_forecast(cfg)
        out = Path(out_dir) if out_dir else Path(cfg["output"])
        write_forecast_outputs(run, out)
        for p in run.horizons:
            parts = " ".join(f"{name}={run.rmse[name][p]:.4g}" for name in run.rmse)
            click.echo(f"rmse p={p}: {parts}", err=True)
        click.echo(str(out / "report.json"))

    _guard(body)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="YAML config")
@click.option("--seed", type=int, default=None, help="Override the master run seed")
@click.option("--workers", type=int, default=1, show_default=True, help="Parallel replicates")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Output directory")
@click.option("--axis", type=click.Choice(SWEEP_AXES), default=None, help="Sweep axis")
@click.option("--values", default=None, help="Comma-separated axis values")
@click.option("--seeds", default=None, help="Comma-separated replicate dataset seeds")
def sweep(config_path, seed, workers, out_dir, axis, values, seeds):
    """Re-run the forecast over an axis and replicate seeds; aggregate quartiles."""

    def body():
        cfg = load_config(config_path)
        if seed is not None:
            cfg["seed"] = seed
        sweep_cfg = cfg.get("sweep", {})
        ax = axis or sweep_cfg.get("axis")
        vals = _parse_list(values) if values else sweep_cfg.get("values")
        sds = [int(s) for s in _parse_list(seeds)] if seeds else sweep_cfg.get("seeds")
        if not ax or not vals or not sds:
            raise ValidationError("sweep needs axis, values, and seeds (flags or sweep block)")
        if ax not in SWEEP_AXES:
            raise ValidationError(f"unknown sweep axis {ax!r}; choose from {SWEEP_AXES}")
        out = Path(out_dir) if out_dir else Path(cfg["output"])
        run_sweep(cfg, ax, vals, sds, workers, out)
        click.echo(str(out / "sweep_summary.csv"))

    _guard(body)


def _parse_list(text: str):
    items = []
    for piece in str(text).split(","):
        piece = piece.strip()
        if not piece:
            continue
        try:
            items.append(int(piece))
        except ValueError:
            items.append(float(piece))
    return items


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="YAML config")
@click.option("--seed", type=int, default=None, help="Override the master run seed")
@click.option("--workers", type=int, default=None, help="Kernel thread count")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Output directory")
def profile(config_path, seed, workers, out_dir):
    """Run the training side only and emit embedding profiles."""

    def body():
        cfg = load_config(config_path)
        if seed is not None:
            cfg["seed"] = seed
        _apply_workers(workers)
        cfg = deepcopy(cfg)
        cfg["baselines"] = {}
        run = run_forecast(cfg)
        out = Path(out_dir) if out_dir else Path(cfg["output"])
        out.mkdir(parents=True, exist_ok=True)
        write_profile_csv(run.profile, out)
        write_profile_summary_csv(run.profile, run.selection, out)
        click.echo(str(out / "profile_summary.csv"))

    _guard(body)


if __name__ == "__main__":
    main()
