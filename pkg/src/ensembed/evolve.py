"""Elitist (mu+lambda) evolution strategy over binary embedding codes.

Fitness of a code is the in-sample forecast error summed over one contiguous
block (split) of training time; the leave-one-out library always spans the
whole training period. Every evaluated individual enters a Hall of Fame from
which the best mutually Hamming-distant codes are later drawn.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EmbeddingCode, FilterSpec, TimeSeriesSet, hamming
from .errors import NoValidSamples, ValidationError
from .predictor import AnalogueConfig, in_sample_panel


@dataclass
class EsConfig:
    """Strategy parameters: mu parents, lambda_ offspring per generation.

    ``population_size`` only sizes the initial random population; subsequent
    generations are governed by mu and lambda_. ``bitflip_prob`` of None means
    one expected flip per genome (1 / code length).
    """

    mu: int = 50
    lambda_: int = 100
    generations: int = 10
    population_size: int = 100
    bitflip_prob: float | None = None
    crossover_prob: float = 0.5
    init_density: float = 0.15
    rng_seed: int = 0

    def __post_init__(self):
        if self.mu < 1 or self.lambda_ < 1:
            raise ValidationError("mu and lambda_ must be >= 1")
        if self.population_size < self.mu:
            raise ValidationError("population_size must be >= mu")
        if not 0.0 < self.init_density < 1.0:
            raise ValidationError("init_density must lie in (0, 1)")
        if self.bitflip_prob is not None and not 0.0 < self.bitflip_prob < 1.0:
            raise ValidationError("bitflip_prob must lie in (0, 1)")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ValidationError("crossover_prob must lie in [0, 1]")
        if self.generations < 0:
            raise ValidationError("generations must be >= 0")


@dataclass
class TrainSplit:
    """One contiguous block of training time indices."""

    split_id: int
    indices: np.ndarray


def make_splits(train_indices: np.ndarray, k: int) -> list[TrainSplit]:
    """Partition training indices into k contiguous blocks, remainder to the last."""
    train_indices = np.asarray(train_indices, dtype=np.int64)
    if k < 1:
        raise ValidationError("need at least one split")
    base = train_indices.size // k
    if base == 0:
        raise ValidationError(f"{train_indices.size} training samples cannot fill {k} splits")
    splits = []
    for i in range(k):
        start = i * base
        stop = (i + 1) * base if i < k - 1 else train_indices.size
        splits.append(TrainSplit(split_id=i + 1, indices=train_indices[start:stop]))
    return splits


class FitnessEvaluator:
    """Memoized split fitness over a shared whole-training neighbor library.

    A code's forecasts are only computed at the requested split's origins
    (the leave-one-out library always spans all of training), and the scalar
    result is memoized per (code, split), so repeated codes cost nothing
    within a run.
    """

    def __init__(
        self,
        series: TimeSeriesSet,
        filt: FilterSpec,
        horizons,
        cfg: AnalogueConfig,
    ):
        self.series = series
        self.filt = filt
        self.horizons = tuple(int(p) for p in horizons)
        self.cfg = cfg
        self.fz = filt.apply(series)
        y = series.target_values
        T = series.length
        truth = np.full((T, len(self.horizons)), np.nan)
        for i, p in enumerate(self.horizons):
            truth[: T - p, i] = y[p:]
        self._truth = truth
        self._memo: dict[tuple, float] = {}

    @property
    def evaluations(self) -> int:
        return len(self._memo)

    def error_profile(self, code: EmbeddingCode, indices: np.ndarray) -> np.ndarray:
        """Per-origin sums over horizons of absolute error, NaN where unscored."""
        indices = np.asarray(indices, dtype=np.int64)
        panel = in_sample_panel(
            self.series, code, self.filt, self.horizons, self.cfg, fz=self.fz, origins=indices
        )
        err = np.abs(panel.values - self._truth)
        err[~panel.scored] = 0.0
        any_scored = panel.scored.any(axis=1)
        profile = np.where(any_scored, err.sum(axis=1), np.nan)
        return profile[indices]

    def fitness(self, code: EmbeddingCode, indices: np.ndarray) -> float:
        """Split fitness; +inf when no index in the split scores anything."""
        indices = np.asarray(indices, dtype=np.int64)
        key = (code.key(), int(indices[0]), int(indices[-1]), indices.size)
        value = self._memo.get(key)
        if value is None:
            vals = self.error_profile(code, indices)
            vals = vals[np.isfinite(vals)]
            value = float(vals.sum()) if vals.size else float("inf")
            self._memo[key] = value
        return value

    def split_evaluator(self, split: TrainSplit):
        return lambda code: self.fitness(code, split.indices)


def fitness(
    code: EmbeddingCode,
    split: TrainSplit,
    series: TimeSeriesSet,
    filt: FilterSpec,
    horizons,
    cfg: AnalogueConfig,
    evaluator: FitnessEvaluator | None = None,
) -> float:
    """Sum of absolute in-sample errors of ``code`` over the split's origins."""
    if evaluator is None:
        evaluator = FitnessEvaluator(series, filt, horizons, cfg)
    value = evaluator.fitness(code, split.indices)
    if not np.isfinite(value):
        raise NoValidSamples(f"split {split.split_id} has no scorable origin for this code")
    return value


class HallOfFame:
    """Every individual ever evaluated, deduplicated by code bits.

    ``best_trace`` records the best parent fitness after each selection step
    (index 0 is the best of the initial population); plus selection makes it
    non-increasing.
    """

    def __init__(self):
        self._entries: dict[bytes, tuple[EmbeddingCode, float]] = {}
        self.best_trace: list[float] = []

    def add(self, code: EmbeddingCode, fit: float):
        if not np.isfinite(fit):
            return  # unscorable codes stay out; they lose every selection anyway
        if code.key() not in self._entries:
            self._entries[code.key()] = (code, fit)

    def __len__(self):
        return len(self._entries)

    def sorted_entries(self) -> list[tuple[EmbeddingCode, float]]:
        """Entries by ascending fitness, insertion order on ties."""
        return sorted(self._entries.values(), key=lambda item: item[1])

    def best(self) -> tuple[EmbeddingCode, float]:
        return self.sorted_entries()[0]


def _variate(parent_bits: np.ndarray, cfg: EsConfig, rng, flip_p: float, forced_bit: int):
    """lambda_ offspring via uniform crossover then per-bit mutation."""
    n_parents, nl = parent_bits.shape
    children = np.empty((cfg.lambda_, nl), dtype=np.uint8)
    for o in range(cfg.lambda_):
        if n_parents >= 2 and rng.random() < cfg.crossover_prob:
            i, j = rng.choice(n_parents, size=2, replace=False)
            take_i = rng.random(nl) < 0.5
            child = np.where(take_i, parent_bits[i], parent_bits[j])
        else:
            child = parent_bits[rng.integers(n_parents)].copy()
        flips = rng.random(nl) < flip_p
        child = np.where(flips, 1 - child, child).astype(np.uint8)
        child[forced_bit] = 1
        children[o] = child
    return children


def es_step(pool, cfg: EsConfig, rng, n: int, l: int, target: int, evaluate):
    """One generation: plus-select mu parents from the pool, then breed lambda_.

    ``pool`` is a list of (code, fitness) covering previous parents plus
    offspring. Returns (parents, offspring) as (code, fitness) lists; the
    target's lag-0 bit is re-set after every variation.
    """
    order = sorted(range(len(pool)), key=lambda i: pool[i][1])
    parents = [pool[i] for i in order[: cfg.mu]]
    flip_p = cfg.bitflip_prob if cfg.bitflip_prob is not None else 1.0 / (n * l)
    parent_bits = np.stack([code.bits for code, _ in parents])
    children = _variate(parent_bits, cfg, rng, flip_p, target * l)
    offspring = []
    for row in children:
        code = EmbeddingCode(row, n, l)
        offspring.append((code, evaluate(code)))
    return parents, offspring


def run_es(
    cfg: EsConfig,
    n: int,
    l: int,
    target: int,
    evaluate,
) -> HallOfFame:
    """Full strategy run; returns the accumulated Hall of Fame.

    The initial population draws each free bit with probability
    ``init_density``; the target's lag-0 bit is always on. Deterministic for
    a fixed ``cfg.rng_seed``.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    nl = n * l
    hof = HallOfFame()
    init = (rng.random((cfg.population_size, nl)) < cfg.init_density).astype(np.uint8)
    init[:, target * l] = 1
    pool = []
    for row in init:
        code = EmbeddingCode(row, n, l)
        fit = evaluate(code)
        hof.add(code, fit)
        pool.append((code, fit))
    hof.best_trace.append(min(fit for _, fit in pool))
    for _ in range(cfg.generations):
        parents, offspring = es_step(pool, cfg, rng, n, l, target, evaluate)
        for code, fit in offspring:
            hof.add(code, fit)
        hof.best_trace.append(min(fit for _, fit in parents))
        pool = parents + offspring
    return hof


def select_diverse(
    hof: HallOfFame,
    m: int,
    theta: int,
    existing=(),
) -> list[EmbeddingCode]:
    """Best <= m Hall of Fame codes pairwise Hamming-distant by >= theta.

    Scans in ascending fitness order; a candidate must clear theta against
    every code in ``existing`` and every code already accepted in this call.
    Returns fewer than m codes when the Hall of Fame is exhausted.
    """
    accepted: list[EmbeddingCode] = []
    guard = list(existing)
    for code, _ in hof.sorted_entries():
        if all(hamming(code, other) >= theta for other in guard) and all(
            hamming(code, other) >= theta for other in accepted
        ):
            accepted.append(code)
            if len(accepted) == m:
                break
    return accepted
