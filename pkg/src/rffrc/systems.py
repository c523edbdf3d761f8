"""Benchmark trajectory generators and additive-noise utilities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, InvalidArgument
from .rng import RandomSource
from .timeseries import TimeSeries

DIVERGENCE_LIMIT = 1e6


def _check_state(state, step: int, what: str):
    if not np.all(np.isfinite(state)) or np.max(np.abs(state)) > DIVERGENCE_LIMIT:
        raise DivergenceError(f"{what} diverged", step)


# ---------------------------------------------------------------- Lorenz63

@dataclass(frozen=True)
class Lorenz63Params:
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    dt: float = 0.025
    n_steps: int = 4000
    initial_state: tuple[float, float, float] = (1.0, 1.0, 1.0)
    transient_steps: int = 1000

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidArgument(f"dt must be positive, got {self.dt}")
        if self.n_steps < 1 or self.transient_steps < 0:
            raise InvalidArgument("n_steps must be >= 1 and transient_steps >= 0")
        if len(self.initial_state) != 3:
            raise InvalidArgument("Lorenz initial_state must have 3 entries")


def lorenz_rhs(state, sigma=10.0, rho=28.0, beta=8.0 / 3.0):
    x, y, z = state
    return np.array([sigma * (y - x), x * (rho - z) - y, x * y - beta * z])


def rk4_step(f, state, h):
    k1 = f(state)
    k2 = f(state + 0.5 * h * k1)
    k3 = f(state + 0.5 * h * k2)
    k4 = f(state + h * k3)
    return state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_lorenz(params: Lorenz63Params = Lorenz63Params()) -> TimeSeries:
    p = params

    def f(s):
        return lorenz_rhs(s, p.sigma, p.rho, p.beta)

    total = p.transient_steps + p.n_steps
    out = np.empty((p.n_steps, 3))
    state = np.array(p.initial_state, dtype=np.float64)
    for i in range(total):
        if i >= p.transient_steps:
            out[i - p.transient_steps] = state
        if i + 1 < total:
            state = rk4_step(f, state, p.dt)
            _check_state(state, i + 1, "Lorenz63 integration")
    return TimeSeries(out, p.dt, ("x", "y", "z"))


# ---------------------------------------------------------------- Mackey-Glass

@dataclass(frozen=True)
class MackeyGlassParams:
    tau: float = 17.0
    a: float = 0.2
    b: float = 0.1
    exponent: float = 10.0
    sample_dt: float = 1.0
    internal_substeps: int = 10
    n_samples: int = 4000
    history_value: float = 1.2
    transient_samples: int = 500

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidArgument(f"tau must be positive, got {self.tau}")
        if self.internal_substeps < 1:
            raise InvalidArgument("internal_substeps must be >= 1")
        if not self.sample_dt > 0 or self.n_samples < 1 or self.transient_samples < 0:
            raise InvalidArgument("sample_dt must be positive, n_samples >= 1, transient_samples >= 0")
        if self.tau < self.sample_dt / self.internal_substeps:
            raise InvalidArgument("tau must be at least one integration substep")


class _DelayBuffer:
    """Ring buffer of the most recent substep values with linear interpolation."""

    def __init__(self, capacity: int, history_value: float):
        self.buf = np.full(capacity, history_value)
        self.capacity = capacity
        self.history_value = history_value
        self.newest = 0  # substep index of the latest stored value

    def push(self, index: int, value: float):
        self.buf[index % self.capacity] = value
        self.newest = index

    def at(self, pos: float) -> float:
        """Value at fractional substep position ``pos``; constant history for pos <= 0."""
        if pos <= 0.0:
            return self.history_value
        i = int(math.floor(pos))
        frac = pos - i
        lo = self.buf[i % self.capacity]
        if frac == 0.0:
            return lo
        hi = self.buf[(i + 1) % self.capacity]
        return lo + frac * (hi - lo)


def integrate_mackey_glass(params: MackeyGlassParams = MackeyGlassParams()) -> TimeSeries:
    """RK4 on the delay equation; delayed term read from an interpolated history."""
    p = params
    h = p.sample_dt / p.internal_substeps
    lag = p.tau / h  # delay in substeps
    hist = _DelayBuffer(int(math.ceil(lag)) + 3, p.history_value)

    def g(x_delayed):
        return p.a * x_delayed / (1.0 + x_delayed ** p.exponent)

    total = p.transient_samples + p.n_samples
    out = np.empty(p.n_samples)
    x = float(p.history_value)
    hist.push(0, x)
    n = 0
    for j in range(total):
        if j >= p.transient_samples:
            out[j - p.transient_samples] = x
        if j + 1 == total:
            break
        for _ in range(p.internal_substeps):
            d0 = g(hist.at(n - lag))
            dh = g(hist.at(n + 0.5 - lag))
            d1 = g(hist.at(n + 1 - lag))
            k1 = d0 - p.b * x
            k2 = dh - p.b * (x + 0.5 * h * k1)
            k3 = dh - p.b * (x + 0.5 * h * k2)
            k4 = d1 - p.b * (x + h * k3)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            n += 1
            if not math.isfinite(x) or abs(x) > DIVERGENCE_LIMIT:
                raise DivergenceError("Mackey-Glass integration diverged", n)
            hist.push(n, x)
    return TimeSeries(out, p.sample_dt, ("x",))


# ---------------------------------------------------------------- Kuramoto-Sivashinsky

def _default_ks_profile(grid_points: int, domain_length: float) -> np.ndarray:
    x = domain_length * np.arange(grid_points) / grid_points
    return np.cos(x / 16.0) * (1.0 + np.sin(x / 16.0))


@dataclass(frozen=True)
class KSParams:
    nu: float = 1.0
    mu: float = 1.0
    domain_length: float = 32.0 * math.pi
    grid_points: int = 128
    dt: float = 0.25
    n_steps: int = 4000
    initial_profile: tuple[float, ...] | None = field(default=None)
    transient_steps: int = 400

    def __post_init__(self):
        L = self.grid_points
        if L < 16 or L & (L - 1):
            raise InvalidArgument(f"grid_points must be a power of two >= 16, got {L}")
        if not (self.nu > 0 and self.mu > 0):
            raise InvalidArgument("nu and mu must be positive")
        if not (self.dt > 0 and self.domain_length > 0):
            raise InvalidArgument("dt and domain_length must be positive")
        if self.n_steps < 1 or self.transient_steps < 0:
            raise InvalidArgument("n_steps must be >= 1 and transient_steps >= 0")
        if self.initial_profile is not None and len(self.initial_profile) != L:
            raise InvalidArgument(f"initial_profile needs {L} values")

    def profile(self) -> np.ndarray:
        if self.initial_profile is None:
            return _default_ks_profile(self.grid_points, self.domain_length)
        return np.asarray(self.initial_profile, dtype=np.float64)

    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.rfftfreq(self.grid_points, d=1.0 / self.grid_points) / self.domain_length


def etdrk4_coefficients(lin: np.ndarray, h: float, n_contour: int = 32):
    """exp(hL), exp(hL/2) and the phi-function weights, via contour means (Kassam-Trefethen)."""
    E = np.exp(h * lin)
    E2 = np.exp(h * lin / 2.0)
    r = np.exp(1j * np.pi * (np.arange(1, n_contour + 1) - 0.5) / n_contour)
    LR = h * lin[:, None] + r[None, :]
    eLR = np.exp(LR)
    Q = h * np.real(np.mean((np.exp(LR / 2.0) - 1.0) / LR, axis=1))
    f1 = h * np.real(np.mean((-4.0 - LR + eLR * (4.0 - 3.0 * LR + LR**2)) / LR**3, axis=1))
    f2 = h * np.real(np.mean((2.0 + LR + eLR * (LR - 2.0)) / LR**3, axis=1))
    f3 = h * np.real(np.mean((-4.0 - 3.0 * LR - LR**2 + eLR * (4.0 - LR)) / LR**3, axis=1))
    return E, E2, Q, f1, f2, f3


class KSStepper:
    """Pseudo-spectral ETDRK4 stepper for u_t = -nu u_xxxx - mu u_xx - u u_x."""

    def __init__(self, params: KSParams):
        self.params = params
        L = params.grid_points
        q = params.wavenumbers()
        self.lin = params.mu * q**2 - params.nu * q**4
        n = np.arange(q.size)
        dealias = n <= L // 3  # 2/3 rule on the quadratic term
        self.g = np.where(dealias, -0.5j * q, 0.0)
        self.E, self.E2, self.Q, self.f1, self.f2, self.f3 = etdrk4_coefficients(self.lin, params.dt)

    def nonlinear(self, v):
        u = np.fft.irfft(v, n=self.params.grid_points)
        return self.g * np.fft.rfft(u * u)

    def step_spectral(self, v):
        Nv = self.nonlinear(v)
        a = self.E2 * v + self.Q * Nv
        Na = self.nonlinear(a)
        b = self.E2 * v + self.Q * Na
        Nb = self.nonlinear(b)
        c = self.E2 * a + self.Q * (2.0 * Nb - Nv)
        Nc = self.nonlinear(c)
        return self.E * v + Nv * self.f1 + 2.0 * (Na + Nb) * self.f2 + Nc * self.f3

    def step(self, u):
        v = self.step_spectral(np.fft.rfft(u))
        return np.fft.irfft(v, n=self.params.grid_points)


def integrate_ks(params: KSParams = KSParams()) -> TimeSeries:
    p = params
    stepper = KSStepper(p)
    L = p.grid_points
    total = p.transient_steps + p.n_steps
    out = np.empty((p.n_steps, L))
    v = np.fft.rfft(p.profile())
    for i in range(total):
        if i >= p.transient_steps:
            out[i - p.transient_steps] = np.fft.irfft(v, n=L)
        if i + 1 < total:
            v = stepper.step_spectral(v)
            if not np.all(np.isfinite(v)):
                raise DivergenceError("Kuramoto-Sivashinsky integration diverged", i + 1)
            if (i + 1) % 50 == 0:
                _check_state(np.fft.irfft(v, n=L), i + 1, "Kuramoto-Sivashinsky integration")
    _check_state(out, total, "Kuramoto-Sivashinsky integration")
    names = tuple(f"u{j}" for j in range(L))
    return TimeSeries(out, p.dt, names)


# ---------------------------------------------------------------- noise

@dataclass(frozen=True)
class NoiseSpec:
    snr_db: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise InvalidArgument(f"snr_db must be finite (or +inf for clean), got {self.snr_db}")


def add_awgn(series: TimeSeries, spec: NoiseSpec) -> TimeSeries:
    """Per-channel white Gaussian noise at ``spec.snr_db``; ``+inf`` returns the series unchanged."""
    if spec.snr_db == math.inf:
        return series
    x = series.data
    power = np.mean((x - x.mean(axis=0)) ** 2, axis=0)
    for c, pw in enumerate(power):
        if not pw > 0:
            raise InvalidArgument(f"channel {series.channel_names[c]!r} has zero signal power")
    std = np.sqrt(power / 10.0 ** (spec.snr_db / 10.0))
    noise = RandomSource(spec.seed).normal(x.shape) * std
    return TimeSeries(x + noise, series.dt, series.channel_names)


def measure_snr(clean, other) -> tuple[np.ndarray, float]:
    """Per-channel 10 log10(sum (clean - mean)^2 / sum (other - clean)^2) and their mean."""
    c = clean.data if isinstance(clean, TimeSeries) else np.asarray(clean, dtype=np.float64)
    o = other.data if isinstance(other, TimeSeries) else np.asarray(other, dtype=np.float64)
    if c.ndim == 1:
        c, o = c[:, None], np.reshape(o, (-1, 1))
    if c.shape != o.shape:
        raise InvalidArgument(f"shape mismatch: {c.shape} vs {o.shape}")
    sig = np.sum((c - c.mean(axis=0)) ** 2, axis=0)
    err = np.sum((o - c) ** 2, axis=0)
    with np.errstate(divide="ignore"):
        db = np.where(err > 0, 10.0 * np.log10(sig / np.where(err > 0, err, 1.0)), np.inf)
    return db, float(np.mean(db))
