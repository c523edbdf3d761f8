"""Declarative experiment configuration with strict JSON parsing."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError, RFFRCError
from .metrics import SWEEP_AXES, GridSpec, Hyper
from .systems import (KSParams, Lorenz63Params, MackeyGlassParams, NoiseSpec, add_awgn, integrate_ks,
                      integrate_lorenz, integrate_mackey_glass)
from .timeseries import SplitSpec, TimeSeries, read_csv

SYSTEMS = ("lorenz63", "mackey_glass", "ks", "external_csv")


@dataclass(frozen=True)
class ModelConfig:
    k: int = 5
    m: int = 3000
    lambda_reg: float = 1e-6
    sigma_rff: float = 2.0
    scaling: str = "minmax"

    @property
    def hyper(self) -> Hyper:
        return Hyper(self.k, self.m, self.lambda_reg, self.sigma_rff)


@dataclass(frozen=True)
class GridConfig:
    k: tuple[int, ...] = (5,)
    m: tuple[int, ...] = (3000,)
    lambda_reg: tuple[float, ...] = (1e-6,)
    sigma_rff: tuple[float, ...] = (2.0,)
    seed_policy: str = "shared"

    def spec(self, seed: int) -> GridSpec:
        return GridSpec(self.k, self.m, self.lambda_reg, self.sigma_rff, seed, self.seed_policy)


@dataclass(frozen=True)
class NoiseConfig:
    snr_db: float = 20.0
    seed: int = 1
    clean_targets: bool = False  # train on clean next states instead of noisy ones
    noisy_test_inputs: bool = False  # feed noisy (instead of clean) delay vectors at test time


@dataclass(frozen=True)
class SweepConfig:
    axis: str = "m"
    values: tuple[float, ...] = (200, 500, 1000, 2000, 3000, 4000)

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}")


@dataclass(frozen=True)
class ExperimentConfig:
    system: str = "lorenz63"
    data_path: str | None = None
    lorenz63: Lorenz63Params = field(default_factory=Lorenz63Params)
    mackey_glass: MackeyGlassParams = field(default_factory=MackeyGlassParams)
    ks: KSParams = field(default_factory=KSParams)
    split: SplitSpec = field(default_factory=SplitSpec)
    model: ModelConfig = field(default_factory=ModelConfig)
    grid: GridConfig | None = None
    sweep: SweepConfig | None = None
    noise: NoiseConfig | None = None
    seed: int = 1
    seeds: tuple[int, ...] = (1,)
    observed: tuple[int, ...] | None = None
    target: tuple[int, ...] | None = None
    horizon: int | None = None  # None: the whole forecast segment
    rollout_segment: str = "test"
    theta: float = 0.4
    steps_per_lyapunov: float | None = None
    normalization: str = "std"
    out: str = "out"

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ConfigError(f"unknown system {self.system!r}; choose from {SYSTEMS}")
        if self.system == "external_csv" and not self.data_path:
            raise ConfigError("system external_csv needs data_path")
        if self.rollout_segment not in ("val", "test"):
            raise ConfigError("rollout_segment must be 'val' or 'test'")
        if self.normalization not in ("std", "range"):
            raise ConfigError("normalization must be 'std' or 'range'")
        if not self.theta > 0:
            raise ConfigError("theta must be positive")
        if self.horizon is not None and self.horizon < 0:
            raise ConfigError("horizon must be >= 0")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")


_NESTED = {
    "lorenz63": Lorenz63Params, "mackey_glass": MackeyGlassParams, "ks": KSParams,
    "split": SplitSpec, "model": ModelConfig, "grid": GridConfig, "sweep": SweepConfig,
    "noise": NoiseConfig,
}
_TUPLE_FIELDS = {"initial_state", "initial_profile", "k", "m", "lambda_reg", "sigma_rff", "values",
                 "seeds", "observed", "target"}


def _coerce(name: str, value, default):
    if value is None:
        return None
    if name in _TUPLE_FIELDS and isinstance(value, list):
        return tuple(value)
    if isinstance(default, bool) or isinstance(value, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be true/false")
        return value
    if isinstance(default, float) and isinstance(value, (int, float)):
        return float(value)
    if isinstance(default, int) and isinstance(value, float) and value.is_integer():
        return int(value)
    return value


def _build(cls, raw: dict, prefix: str, defaulted: list[str]):
    if not isinstance(raw, dict):
        raise ConfigError(f"{prefix or 'config'} must be a JSON object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - set(fields))
    if unknown:
        where = f" in {prefix}" if prefix else ""
        raise ConfigError(f"unknown config key(s){where}: {', '.join(unknown)}")
    kwargs = {}
    for name, f in fields.items():
        path = f"{prefix}.{name}" if prefix else name
        if name in _NESTED:
            sub = raw.get(name)
            if sub is None and name in raw and f.default is None:
                kwargs[name] = None
                continue
            if sub is None and f.default is None:
                defaulted.append(path)
                continue
            kwargs[name] = _build(_NESTED[name], sub or {}, path, defaulted)
            continue
        if name not in raw:
            defaulted.append(path)
            continue
        default = f.default if f.default is not dataclasses.MISSING else None
        kwargs[name] = _coerce(name, raw[name], default)
    try:
        return cls(**kwargs)
    except RFFRCError as exc:
        raise ConfigError(f"{prefix or 'config'}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{prefix or 'config'}: {exc}") from exc


def from_dict(raw: dict) -> tuple[ExperimentConfig, list[str]]:
    """Parse and validate; also returns the dotted names of every defaulted field."""
    defaulted: list[str] = []
    cfg = _build(ExperimentConfig, raw, "", defaulted)
    return cfg, defaulted


def load_config(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def to_dict(cfg) -> dict[str, Any]:
    return _jsonable(dataclasses.asdict(cfg))


def annotated(cfg: ExperimentConfig, defaulted: list[str]) -> dict[str, dict]:
    """Flat ``{dotted.name: {"value": v, "defaulted": bool}}`` view for sidecars."""
    flat: dict[str, dict] = {}
    marks = set(defaulted)

    def walk(d, prefix, inherited):
        for key, val in d.items():
            path = f"{prefix}.{key}" if prefix else key
            is_def = inherited or path in marks
            if isinstance(val, dict):
                walk(val, path, is_def)
            else:
                flat[path] = {"value": val, "defaulted": is_def}

    walk(to_dict(cfg), "", False)
    return flat


def load_series(cfg: ExperimentConfig) -> TimeSeries:
    """Clean trajectory for the configured system."""
    if cfg.system == "lorenz63":
        return integrate_lorenz(cfg.lorenz63)
    if cfg.system == "mackey_glass":
        return integrate_mackey_glass(cfg.mackey_glass)
    if cfg.system == "ks":
        return integrate_ks(cfg.ks)
    return read_csv(cfg.data_path)


def noisy_copy(series: TimeSeries, cfg: ExperimentConfig, seed: int | None = None) -> TimeSeries:
    if cfg.noise is None:
        return series
    return add_awgn(series, NoiseSpec(cfg.noise.snr_db, cfg.noise.seed if seed is None else seed))
