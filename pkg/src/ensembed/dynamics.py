"""Deterministic trajectory generators for the experiment datasets.

Ordinary differential systems (Lorenz '63, Roessler, Lorenz '96I) integrate
with classical fixed-step RK4 and record every ``record_stride``-th state;
Kuramoto-Sivashinsky integrates pseudo-spectrally with the ETDRK4 scheme of
Kassam and Trefethen. Random walks and scaled observational noise complete
the toy datasets. Everything is seed-deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import TimeSeriesSet
from .errors import NonFiniteState, ValidationError

ODE_SYSTEMS = ("lorenz63", "rossler", "lorenz96")
SYSTEMS = ODE_SYSTEMS + ("kuramoto-sivashinsky", "random-walk")


@dataclass
class SimSpec:
    """One trajectory request.

    ``parameters`` names the system constants (lorenz63: p, r, b; rossler:
    a, b, c; lorenz96: forcing, dim; kuramoto-sivashinsky: domain, grid,
    sample_time, internal_dt, n_vars). ``length`` counts recorded samples
    after ``transient_discard`` recorded samples are dropped.
    """

    system: str
    parameters: dict = field(default_factory=dict)
    dt: float = 0.001
    record_stride: int = 50
    length: int = 1000
    transient_discard: int = 100
    rng_seed: int = 0

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ValidationError(f"unknown system {self.system!r}; choose from {SYSTEMS}")
        if self.dt <= 0 or self.record_stride < 1 or self.length < 1:
            raise ValidationError("need dt > 0, record_stride >= 1, length >= 1")
        if self.transient_discard < 0:
            raise ValidationError("transient_discard must be >= 0")


def lorenz63_deriv(state: np.ndarray, p: float = 10.0, r: float = 28.0, b: float = 8.0 / 3.0):
    x, y, z = state
    return np.array([p * (y - x), x * (r - z) - y, x * y - b * z])


def rossler_deriv(state: np.ndarray, a: float = 0.36, b: float = 0.4, c: float = 4.5):
    x, y, z = state
    return np.array([-y - z, x + a * y, b + z * (x - c)])


def lorenz96_deriv(state: np.ndarray, forcing: float = 8.0):
    return (np.roll(state, -1) - np.roll(state, 2)) * np.roll(state, 1) - state + forcing


def rk4_step(deriv, state: np.ndarray, dt: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step."""
    k1 = deriv(state)
    k2 = deriv(state + 0.5 * dt * k1)
    k3 = deriv(state + 0.5 * dt * k2)
    k4 = deriv(state + dt * k3)
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _ode_deriv(spec: SimSpec):
    pars = spec.parameters
    if spec.system == "lorenz63":
        p = float(pars.get("p", 10.0))
        r = float(pars.get("r", 28.0))
        b = float(pars.get("b", 8.0 / 3.0))
        return 3, (lambda s: lorenz63_deriv(s, p, r, b))
    if spec.system == "rossler":
        a = float(pars.get("a", 0.36))
        b = float(pars.get("b", 0.4))
        c = float(pars.get("c", 4.5))
        return 3, (lambda s: rossler_deriv(s, a, b, c))
    if spec.system == "lorenz96":
        forcing = float(pars.get("forcing", 8.0))
        dim = int(pars.get("dim", 10))
        if dim < 4:
            raise ValidationError("lorenz96 needs at least 4 variables")
        return dim, (lambda s: lorenz96_deriv(s, forcing))
    raise ValidationError(f"{spec.system} is not an ODE system")


def integrate_ode(spec: SimSpec) -> TimeSeriesSet:
    """Integrate an ODE system from a standard-normal initial condition.

    Records every ``record_stride``-th RK4 state, drops the leading
    ``transient_discard`` records, and raises :class:`NonFiniteState` on
    blow-up.
    """
    dim, deriv = _ode_deriv(spec)
    rng = np.random.default_rng(spec.rng_seed)
    state = rng.standard_normal(dim)
    total = spec.transient_discard + spec.length
    out = np.empty((dim, spec.length))
    for rec in range(total):
        for _ in range(spec.record_stride):
            state = rk4_step(deriv, state, spec.dt)
        if not np.all(np.isfinite(state)):
            raise NonFiniteState(f"{spec.system} trajectory left finite range at record {rec}")
        if rec >= spec.transient_discard:
            out[:, rec - spec.transient_discard] = state
    names = [f"x{i}" for i in range(dim)]
    return TimeSeriesSet(
        values=out,
        variable_names=names,
        target_index=0,
        sample_period=spec.dt * spec.record_stride,
    )


def integrate_ks(spec: SimSpec) -> TimeSeriesSet:
    """Kuramoto-Sivashinsky: u_t = -u_xx - u_xxxx - u u_x, periodic on [0, domain].

    Pseudo-spectral ETDRK4 with a 2/3 dealiasing rule; the internal step
    subdivides the sampling time. Returns the first ``n_vars`` grid values.
    The spatial mean (zero mode) is conserved, so the initial field is drawn
    mean-free.
    """
    pars = spec.parameters
    domain = float(pars.get("domain", 22.0))
    grid = int(pars.get("grid", 128))
    sample_time = float(pars.get("sample_time", 1.0))
    internal_dt = float(pars.get("internal_dt", 0.25))
    n_vars = int(pars.get("n_vars", 10))
    if grid < 2 or (grid & (grid - 1)) != 0:
        raise ValidationError("grid count must be a power of two")
    if not 1 <= n_vars <= grid:
        raise ValidationError(f"n_vars must lie in [1, {grid}]")
    substeps = max(1, round(sample_time / internal_dt))
    h = sample_time / substeps

    q = 2.0 * np.pi * np.arange(grid // 2 + 1) / domain
    lin = q**2 - q**4
    E = np.exp(h * lin)
    E2 = np.exp(h * lin / 2.0)
    # phi-function coefficients via the contour-integral trick (numerically
    # stable near lin = 0)
    n_contour = 32
    r = np.exp(1j * np.pi * (np.arange(1, n_contour + 1) - 0.5) / n_contour)
    LR = h * lin[:, None] + r[None, :]
    Q = h * np.real(np.mean((np.exp(LR / 2.0) - 1.0) / LR, axis=1))
    f1 = h * np.real(
        np.mean((-4.0 - LR + np.exp(LR) * (4.0 - 3.0 * LR + LR**2)) / LR**3, axis=1)
    )
    f2 = h * np.real(np.mean((2.0 + LR + np.exp(LR) * (-2.0 + LR)) / LR**3, axis=1))
    f3 = h * np.real(
        np.mean((-4.0 - 3.0 * LR - LR**2 + np.exp(LR) * (4.0 - LR)) / LR**3, axis=1)
    )
    g = -0.5j * q
    dealias = np.arange(grid // 2 + 1) <= grid // 3

    rng = np.random.default_rng(spec.rng_seed)
    u = 0.1 * rng.standard_normal(grid)
    u -= u.mean()
    v = np.fft.rfft(u)

    def nonlin(vhat):
        real = np.fft.irfft(vhat, n=grid)
        return g * np.fft.rfft(real * real) * dealias

    total = spec.transient_discard + spec.length
    out = np.empty((n_vars, spec.length))
    for rec in range(total):
        for _ in range(substeps):
            nv = nonlin(v)
            a = E2 * v + Q * nv
            na = nonlin(a)
            b = E2 * v + Q * na
            nb = nonlin(b)
            c = E2 * a + Q * (2.0 * nb - nv)
            nc = nonlin(c)
            v = E * v + nv * f1 + 2.0 * (na + nb) * f2 + nc * f3
        u = np.fft.irfft(v, n=grid)
        if not np.all(np.isfinite(u)):
            raise NonFiniteState(f"kuramoto-sivashinsky field blew up at record {rec}")
        if rec >= spec.transient_discard:
            out[:, rec - spec.transient_discard] = u[:n_vars]
    names = [f"x{i}" for i in range(n_vars)]
    return TimeSeriesSet(
        values=out,
        variable_names=names,
        target_index=0,
        sample_period=sample_time,
    )


def random_walk(length: int, seed: int) -> np.ndarray:
    """Cumulative sum of standard-normal increments, starting at 0."""
    if length < 1:
        raise ValidationError("length must be >= 1")
    rng = np.random.default_rng(seed)
    path = np.empty(length)
    path[0] = 0.0
    if length > 1:
        path[1:] = np.cumsum(rng.standard_normal(length - 1))
    return path


def add_observational_noise(
    series: TimeSeriesSet,
    scale: float,
    seed: int,
    reference: str = "per-variable",
) -> TimeSeriesSet:
    """Add Gaussian noise with standard deviation ``scale`` times a series scale.

    ``reference`` picks the scale source: each variable's own standard
    deviation over the full record (default) or the target variable's.
    Constant variables stay untouched; scale 0 returns an identical copy.
    """
    if scale < 0:
        raise ValidationError("noise scale must be >= 0")
    if reference not in ("per-variable", "target"):
        raise ValidationError("reference must be 'per-variable' or 'target'")
    if scale == 0.0:
        return series.replace_values(series.values.copy())
    stds = series.values.std(axis=1)
    if reference == "target":
        stds = np.full(series.n, stds[series.target_index])
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(series.values.shape) * (scale * stds)[:, None]
    return series.replace_values(series.values + noise)


@dataclass
class DatasetSpec:
    """Observed dataset: a system's leading variables plus appended random walks."""

    kind: str
    length: int
    seed: int = 0
    n_system_vars: int | None = None
    n_random_walks: int = 0
    noise_scale: float = 0.0
    parameters: dict = field(default_factory=dict)
    dt: float | None = None
    record_stride: int | None = None
    transient_discard: int | None = None


_GENERATOR_DEFAULTS = {
    "lorenz63": dict(dt=0.001, record_stride=100, transient_discard=200),
    "rossler": dict(dt=0.001, record_stride=500, transient_discard=200),
    "lorenz96": dict(dt=0.001, record_stride=50, transient_discard=200),
    "kuramoto-sivashinsky": dict(dt=1.0, record_stride=1, transient_discard=250),
    "random-walk": dict(dt=1.0, record_stride=1, transient_discard=0),
    "flood-surrogate": dict(dt=1.0, record_stride=1, transient_discard=0),
}


def generate_dataset(dspec: DatasetSpec) -> tuple[list[str], np.ndarray]:
    """Build the observation matrix for a dataset spec; see module docstring.

    Seeds for the system trajectory, each random walk, and the noise draw are
    spawned independently from ``dspec.seed``.
    """
    defaults = _GENERATOR_DEFAULTS.get(dspec.kind)
    if defaults is None:
        raise ValidationError(f"unknown dataset kind {dspec.kind!r}")
    seeds = np.random.SeedSequence(dspec.seed).spawn(2 + dspec.n_random_walks)
    sys_seed = int(seeds[0].generate_state(1, np.uint64)[0])
    noise_seed = int(seeds[1].generate_state(1, np.uint64)[0])
    walk_seeds = [int(s.generate_state(1, np.uint64)[0]) for s in seeds[2:]]

    if dspec.kind == "flood-surrogate":
        names, values = flood_surrogate(dspec.length, sys_seed)
    elif dspec.kind == "random-walk":
        names, values = [], np.empty((0, dspec.length))
    else:
        spec = SimSpec(
            system=dspec.kind,
            parameters=dict(dspec.parameters),
            dt=dspec.dt if dspec.dt is not None else defaults["dt"],
            record_stride=(
                dspec.record_stride if dspec.record_stride is not None else defaults["record_stride"]
            ),
            length=dspec.length,
            transient_discard=(
                dspec.transient_discard
                if dspec.transient_discard is not None
                else defaults["transient_discard"]
            ),
            rng_seed=sys_seed,
        )
        base = integrate_ks(spec) if dspec.kind == "kuramoto-sivashinsky" else integrate_ode(spec)
        keep = dspec.n_system_vars if dspec.n_system_vars is not None else base.n
        if not 1 <= keep <= base.n:
            raise ValidationError(f"n_system_vars must lie in [1, {base.n}]")
        names = list(base.variable_names[:keep])
        values = base.values[:keep]

    offset = len(names)
    for i, wseed in enumerate(walk_seeds):
        names.append(f"x{offset + i}")
        values = np.vstack([values, random_walk(dspec.length, wseed)[None, :]])
    if values.shape[0] == 0:
        raise ValidationError("dataset has no variables")

    if dspec.noise_scale > 0:
        holder = TimeSeriesSet(values=values, variable_names=names, target_index=0)
        values = add_observational_noise(holder, dspec.noise_scale, noise_seed).values
    return names, values


def flood_surrogate(length: int, seed: int) -> tuple[list[str], np.ndarray]:
    """Synthetic nine-column river-stage dataset (Q, US1-3, RG1-5).

    Rain gauges emit bursty exponential rainfall; upstream stages route
    smoothed rainfall with increasing delay; the target stage mixes delayed
    upstream contributions with a slow recession. Purely a stand-in with the
    real dataset's schema for exercising ingestion and multi-horizon runs.
    """
    rng = np.random.default_rng(seed)
    pad = 24
    T = length + pad
    gauges = np.zeros((5, T))
    for g in range(5):
        bursts = rng.random(T) < 0.10
        amounts = rng.exponential(1.0, T) * bursts
        kernel = np.array([0.5, 0.3, 0.2])
        gauges[g] = np.convolve(amounts, kernel)[:T]
    upstream = np.zeros((3, T))
    decay = (0.80, 0.85, 0.90)
    delay = (1, 2, 3)
    rain_total = gauges.mean(axis=0)
    for j in range(3):
        level = 1.0
        for t in range(T):
            drive = rain_total[t - delay[j]] if t >= delay[j] else 0.0
            level = decay[j] * level + 0.6 * drive + 0.02 * rng.standard_normal()
            upstream[j, t] = level
    q = np.zeros(T)
    level = 1.0
    for t in range(T):
        inflow = sum(
            upstream[j, t - delay[j] - 1] if t >= delay[j] + 1 else 0.0 for j in range(3)
        )
        level = 0.88 * level + 0.10 * inflow + 0.02 * rng.standard_normal()
        q[t] = level
    names = ["Q", "US1", "US2", "US3", "RG1", "RG2", "RG3", "RG4", "RG5"]
    values = np.vstack([q[None, pad:], upstream[:, pad:], gauges[:, pad:]])
    return names, values
