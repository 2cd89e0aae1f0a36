"""Core domain types: observation sets, embedding codes, delay vectors, FIR filters.

Conventions used throughout the package:

* An observation set holds ``n`` variables over ``T`` samples as an (n, T) matrix.
* An embedding code is a binary word of length ``n * l`` laid out variable-major,
  lag-minor: bit ``i * l + tau`` selects variable ``i`` at lag ``tau``.
* Delay-vector coordinates follow the same fixed order, so two codes with equal
  bits always produce component-wise comparable vectors.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    InsufficientHistory,
    LengthMismatch,
    OutOfHistory,
    SeriesTooShort,
    ValidationError,
)


@dataclass
class TimeSeriesSet:
    """Multivariate observation set with a target variable and a train/test partition.

    Parameters
    ----------
    values : ndarray, shape (n, T)
        Observations, all finite.
    variable_names : sequence of str
        One label per variable.
    target_index : int
        Index of the variable to forecast.
    sample_period : float
        Abstract time units per step (metadata only).
    train_indices, test_indices : ndarray of int
        Disjoint, ordered subsets of ``[0, T)``. When both are omitted the whole
        record is treated as training data.
    """

    values: np.ndarray
    variable_names: list[str]
    target_index: int
    sample_period: float = 1.0
    train_indices: np.ndarray = None
    test_indices: np.ndarray = None

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValidationError("values must be a 2-D (variables x samples) matrix")
        n, T = self.values.shape
        if len(self.variable_names) != n:
            raise ValidationError(f"{len(self.variable_names)} names for {n} variables")
        if not 0 <= self.target_index < n:
            raise ValidationError(f"target_index {self.target_index} outside [0, {n})")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("values contain non-finite entries")
        if self.train_indices is None:
            self.train_indices = np.arange(T, dtype=np.int64)
        self.train_indices = np.asarray(self.train_indices, dtype=np.int64)
        if self.test_indices is None:
            self.test_indices = np.empty(0, dtype=np.int64)
        self.test_indices = np.asarray(self.test_indices, dtype=np.int64)
        for name, idx in (("train", self.train_indices), ("test", self.test_indices)):
            if idx.size and (idx.min() < 0 or idx.max() >= T):
                raise ValidationError(f"{name}_indices outside [0, {T})")
        if np.intersect1d(self.train_indices, self.test_indices).size:
            raise ValidationError("train and test indices overlap")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    @property
    def target_name(self) -> str:
        return self.variable_names[self.target_index]

    @property
    def target_values(self) -> np.ndarray:
        return self.values[self.target_index]

    def is_train(self) -> np.ndarray:
        """Boolean mask over samples, True on training rows."""
        mask = np.zeros(self.length, dtype=bool)
        mask[self.train_indices] = True
        return mask

    def replace_values(self, values: np.ndarray) -> "TimeSeriesSet":
        """Copy of this set with a new observation matrix, same partition."""
        return TimeSeriesSet(
            values=values,
            variable_names=list(self.variable_names),
            target_index=self.target_index,
            sample_period=self.sample_period,
            train_indices=self.train_indices.copy(),
            test_indices=self.test_indices.copy(),
        )


class EmbeddingCode:
    """Binary word of length ``n * l`` selecting which (variable, lag) pairs are embedded.

    Bit ``i * l + tau`` corresponds to variable ``i`` observed ``tau`` steps back.
    At least one bit must be set. Creation sites are responsible for keeping the
    target's lag-0 bit on; variation operators re-set it after every edit.
    """

    __slots__ = ("bits", "n", "l", "_key")

    def __init__(self, bits, n: int, l: int):
        bits = np.ascontiguousarray(bits, dtype=np.uint8)
        if bits.ndim != 1 or bits.size != n * l:
            raise ValidationError(f"code needs {n * l} bits, got shape {bits.shape}")
        if not np.all((bits == 0) | (bits == 1)):
            raise ValidationError("code bits must be 0 or 1")
        if int(bits.sum()) < 1:
            raise ValidationError("code must embed at least one coordinate")
        bits.setflags(write=False)
        self.bits = bits
        self.n = n
        self.l = l
        self._key = bits.tobytes()

    @classmethod
    def from_coords(cls, coords: Sequence[tuple[int, int]], n: int, l: int) -> "EmbeddingCode":
        bits = np.zeros(n * l, dtype=np.uint8)
        for var, lag in coords:
            if not (0 <= var < n and 0 <= lag < l):
                raise ValidationError(f"coordinate ({var}, {lag}) outside ({n}, {l}) grid")
            bits[var * l + lag] = 1
        return cls(bits, n, l)

    @property
    def dimension(self) -> int:
        """Embedding dimension E (number of selected coordinates)."""
        return int(self.bits.sum())

    @property
    def max_lag(self) -> int:
        return max(lag for _, lag in self.coords())

    def coords(self) -> list[tuple[int, int]]:
        """Selected (variable, lag) pairs in the fixed variable-major, lag-minor order."""
        idx = np.flatnonzero(self.bits)
        return [(int(i) // self.l, int(i) % self.l) for i in idx]

    def variables(self) -> np.ndarray:
        """Boolean mask over variables, True where any lag of the variable is embedded."""
        return self.bits.reshape(self.n, self.l).any(axis=1)

    def key(self) -> bytes:
        return self._key

    def __eq__(self, other):
        return (
            isinstance(other, EmbeddingCode)
            and self.n == other.n
            and self.l == other.l
            and self._key == other._key
        )

    def __hash__(self):
        return hash((self.n, self.l, self._key))

    def __repr__(self):
        word = "".join(str(int(b)) for b in self.bits)
        return f"EmbeddingCode({word}, n={self.n}, l={self.l})"


@dataclass(frozen=True)
class DelayVector:
    """Reconstructed state-space point: components paired with (variable, lag) coords."""

    components: np.ndarray
    coords: tuple[tuple[int, int], ...]

    @property
    def dimension(self) -> int:
        return len(self.coords)


@dataclass
class ForecastPanel:
    """Forecasts of one embedding over every (origin, horizon) pair.

    ``values[t, j]`` is the original-units forecast issued at origin ``t`` for
    ``horizons[j]`` steps ahead, NaN where undefined. ``scored[t, j]`` marks
    entries whose true future is available for error measurement (training
    rows for in-sample panels, any observed row for test panels).
    """

    values: np.ndarray
    horizons: tuple[int, ...]
    scored: np.ndarray

    def value(self, t: int, p: int) -> float:
        return float(self.values[t, self.horizons.index(p)])

    def horizon_column(self, p: int) -> int:
        return self.horizons.index(p)


def hamming(a: EmbeddingCode, b: EmbeddingCode) -> int:
    """Number of differing bits between two codes of equal length."""
    if a.bits.size != b.bits.size:
        raise LengthMismatch(f"code lengths differ: {a.bits.size} vs {b.bits.size}")
    return int(np.count_nonzero(a.bits != b.bits))


def build_delay_vector(series, code: EmbeddingCode, t: int) -> DelayVector:
    """Assemble the delay vector of ``code`` at time ``t``.

    ``series`` is any object exposing an (n, T) ``values`` matrix (raw or
    filtered). Raises :class:`OutOfHistory` when a selected lag reaches before
    sample 0.
    """
    coords = code.coords()
    max_lag = max(lag for _, lag in coords)
    if t - max_lag < 0:
        raise OutOfHistory(f"t={t} needs history back to {t - max_lag}")
    vals = series.values
    comps = np.array([vals[var, t - lag] for var, lag in coords], dtype=np.float64)
    return DelayVector(components=comps, coords=tuple(coords))


def delay_matrix(values: np.ndarray, code: EmbeddingCode) -> tuple[np.ndarray, int]:
    """Delay vectors for every time index at once.

    Returns ``(V, max_lag)`` where ``V`` has shape (T, E) and row ``t`` holds the
    delay vector at ``t``; rows before ``max_lag`` are meaningless and must be
    masked out by the caller.
    """
    coords = code.coords()
    T = values.shape[1]
    E = len(coords)
    V = np.empty((T, E), dtype=np.float64)
    for j, (var, lag) in enumerate(coords):
        if lag == 0:
            V[:, j] = values[var]
        else:
            V[lag:, j] = values[var, :-lag]
            V[:lag, j] = np.nan
    return V, max(lag for _, lag in coords)


@dataclass
class FilterSpec:
    """FIR filter bank with per-variable standardization.

    ``coefficients`` has shape (n, N) with ``coefficients[:, 0] == 1``. The
    filtered, standardized series is

        z_i(t) = (sum_k h_i(k) * y_i(t - k) - mu_i) / sigma_i ,

    valid for ``t >= N - 1``. ``rho`` labels the single free coefficient of the
    two-tap family ``h = (1, rho)``; it is None for filters built another way.
    """

    coefficients: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    rho: float | None = None

    def __post_init__(self):
        self.coefficients = np.atleast_2d(np.asarray(self.coefficients, dtype=np.float64))
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        if not np.allclose(self.coefficients[:, 0], 1.0):
            raise ValidationError("h_i(0) must be 1 for every variable")
        if np.any(self.sigma <= 0):
            raise ValidationError("standardization sigma must be positive")

    @property
    def n_taps(self) -> int:
        return self.coefficients.shape[1]

    @classmethod
    def identity(cls, n: int) -> "FilterSpec":
        """Single-tap pass-through: z = y."""
        return cls(np.ones((n, 1)), np.zeros(n), np.ones(n), rho=None)

    @classmethod
    def standardize(cls, series: TimeSeriesSet) -> "FilterSpec":
        """Single-tap filter that standardizes each variable over training rows."""
        return cls.from_coefficients(series, np.ones((series.n, 1)), rho=None)

    @classmethod
    def fit(cls, series: TimeSeriesSet, rho: float) -> "FilterSpec":
        """Two-tap family ``h = (1, rho)``, standardization fitted on training rows."""
        h = np.column_stack([np.ones(series.n), np.full(series.n, float(rho))])
        return cls.from_coefficients(series, h, rho=float(rho))

    @classmethod
    def from_coefficients(cls, series: TimeSeriesSet, h: np.ndarray, rho=None) -> "FilterSpec":
        """Fit standardization constants for arbitrary coefficients.

        The constants are the mean and standard deviation of the raw filtered
        signal over training rows whose full filter support lies inside the
        training partition, so fitting never reads test-period data. A constant
        filtered signal gets sigma = 1 to keep the spec invariant sigma > 0.
        """
        h = np.atleast_2d(np.asarray(h, dtype=np.float64))
        n, n_taps = h.shape
        if n != series.n:
            raise ValidationError(f"{n} coefficient rows for {series.n} variables")
        u, valid = _raw_filter(series.values, h, series.is_train())
        if not valid.any():
            raise SeriesTooShort("no training sample covers the filter support")
        mu = u[:, valid].mean(axis=1)
        sigma = u[:, valid].std(axis=1)
        sigma[sigma == 0.0] = 1.0
        return cls(h, mu, sigma, rho=rho)

    def apply(self, series: TimeSeriesSet) -> "FilteredSeries":
        """Filter and standardize every variable; see :func:`apply_filter`."""
        n_taps = self.n_taps
        if series.length < n_taps:
            raise SeriesTooShort(f"series length {series.length} < filter taps {n_taps}")
        u, valid_train = _raw_filter(series.values, self.coefficients, series.is_train())
        z = (u - self.mu[:, None]) / self.sigma[:, None]
        valid_obs = np.zeros(series.length, dtype=bool)
        valid_obs[n_taps - 1 :] = True
        return FilteredSeries(
            values=z,
            filter=self,
            base=series,
            valid_obs=valid_obs,
            valid_train=valid_train,
        )


def _raw_filter(values: np.ndarray, h: np.ndarray, is_train: np.ndarray):
    """Unstandardized filter output plus the train-validity mask.

    A sample t is train-valid when t >= N-1 and every row in its support
    window t-N+1 .. t is a training row; this keeps all training-side
    machinery blind to test-period values even when the test block sits in
    the middle of the record.
    """
    n, T = values.shape
    n_taps = h.shape[1]
    u = np.full((n, T), np.nan)
    u[:, n_taps - 1 :] = 0.0
    for k in range(n_taps):
        end = T - k
        u[:, n_taps - 1 :] += h[:, k : k + 1] * values[:, n_taps - 1 - k : end]
    counts = np.convolve(is_train.astype(np.int64), np.ones(n_taps, dtype=np.int64))[: T]
    valid_train = counts == n_taps
    valid_train[: n_taps - 1] = False
    return u, valid_train


@dataclass
class FilteredSeries:
    """Filtered view of an observation set.

    ``values`` holds z with NaN on the first N-1 samples. ``valid_obs`` marks
    samples computable from observations alone; ``valid_train`` additionally
    requires the filter support to lie inside the training partition.
    """

    values: np.ndarray
    filter: FilterSpec
    base: TimeSeriesSet
    valid_obs: np.ndarray
    valid_train: np.ndarray

    @property
    def target_index(self) -> int:
        return self.base.target_index

    @property
    def length(self) -> int:
        return self.values.shape[1]


def apply_filter(series: TimeSeriesSet, filt: FilterSpec) -> FilteredSeries:
    """Apply an FIR filter bank with standardization to every variable.

    Returns a :class:`FilteredSeries` whose first ``N - 1`` samples are marked
    invalid (NaN) rather than zero-padded. Raises :class:`SeriesTooShort` when
    the record is shorter than the filter support.
    """
    return filt.apply(series)


def restore_forecast(zhat, filt: FilterSpec, target: int, history, p: int) -> float:
    """Convert filtered-scale forecasts back to original units at horizon ``p``.

    Parameters
    ----------
    zhat : sequence of float
        Forecasts of the filtered target for horizons 1..p (at least p values).
    filt : FilterSpec
        The filter the forecasts were made under.
    target : int
        Target variable index.
    history : sequence of float
        Most recent true target values ending at the forecast origin:
        ``y_f(t - N + 2), ..., y_f(t)`` (N - 1 values; more is fine).
    p : int
        Forecast horizon.

    For horizon 1 the filter equation is inverted directly; for larger
    horizons the filter taps that reach past the origin are fed the restored
    forecasts of the lower horizons, recursively.
    """
    h = filt.coefficients[target]
    n_taps = h.size
    mu = float(filt.mu[target])
    sigma = float(filt.sigma[target])
    zhat = np.asarray(zhat, dtype=np.float64)
    if p < 1 or zhat.size < p:
        raise ValidationError(f"need forecasts for horizons 1..{p}, got {zhat.size}")
    hist = np.asarray(history, dtype=np.float64)
    if hist.size < n_taps - 1:
        raise InsufficientHistory(f"need {n_taps - 1} past target values, got {hist.size}")
    restored = np.empty(p)
    for q in range(1, p + 1):
        acc = sigma * zhat[q - 1] + mu
        for k in range(1, n_taps):
            if h[k] == 0.0:
                continue
            s = q - k
            if s >= 1:
                acc -= h[k] * restored[s - 1]
            else:
                acc -= h[k] * hist[hist.size - 1 + s]
        restored[q - 1] = acc
    return float(restored[p - 1])


def restore_panel(
    zhat: np.ndarray,
    filt: FilterSpec,
    target: int,
    y_target: np.ndarray,
    origins: np.ndarray,
) -> np.ndarray:
    """Vectorized :func:`restore_forecast` over many origins.

    ``zhat`` has shape (len(origins), P) with columns for horizons 1..P; NaN
    entries propagate. ``y_target`` is the full true target record used for
    the taps that stay at or before each origin.
    """
    h = filt.coefficients[target]
    n_taps = h.size
    mu = float(filt.mu[target])
    sigma = float(filt.sigma[target])
    out = np.empty_like(zhat)
    for qi in range(zhat.shape[1]):
        q = qi + 1
        acc = sigma * zhat[:, qi] + mu
        for k in range(1, n_taps):
            if h[k] == 0.0:
                continue
            s = q - k
            if s >= 1:
                acc = acc - h[k] * out[:, s - 1]
            else:
                acc = acc - h[k] * y_target[origins + s]
        out[:, qi] = acc
    return out
