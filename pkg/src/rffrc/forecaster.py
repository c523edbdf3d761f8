"""Delay-embedded random-feature forecaster: training, one-step prediction, closed-loop rollout."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ridge
from .errors import ClosedLoopInfeasible, DivergenceError, InvalidArgument
from .features import FeatureMap, sample_feature_map, transform
from .ridge import RidgeModel
from .timeseries import DelayConfig, TimeSeries, _channel_list, make_training_pairs

SCALINGS = ("minmax", "standard", "none")
DEFAULT_THETA = 0.4


@dataclass(frozen=True, eq=False)
class Scaler:
    """Per-channel affine map ``(x - offset) / scale`` fitted on training data."""

    offset: np.ndarray
    scale: np.ndarray
    kind: str = "minmax"

    def __post_init__(self):
        off = np.array(self.offset, dtype=np.float64).reshape(-1)
        sc = np.array(self.scale, dtype=np.float64).reshape(-1)
        if off.shape != sc.shape or np.any(sc <= 0) or not np.all(np.isfinite(sc)):
            raise InvalidArgument("scaler needs matching offset/scale vectors with positive scale")
        if self.kind not in SCALINGS:
            raise InvalidArgument(f"unknown scaling {self.kind!r}; choose from {SCALINGS}")
        off.setflags(write=False)
        sc.setflags(write=False)
        object.__setattr__(self, "offset", off)
        object.__setattr__(self, "scale", sc)

    @classmethod
    def fit(cls, data: np.ndarray, kind: str = "minmax") -> "Scaler":
        d = data.shape[1]
        if kind == "minmax":
            off = data.min(axis=0)
            sc = data.max(axis=0) - off
        elif kind == "standard":
            off = data.mean(axis=0)
            sc = data.std(axis=0)
        elif kind == "none":
            off, sc = np.zeros(d), np.ones(d)
        else:
            raise InvalidArgument(f"unknown scaling {kind!r}; choose from {SCALINGS}")
        sc = np.where(sc > 0, sc, 1.0)  # constant channels pass through unscaled
        return cls(off, sc, kind)


@dataclass(frozen=True, eq=False)
class ForecastModel:
    delay_cfg: DelayConfig
    observed_channels: tuple[int, ...]
    target_channels: tuple[int, ...]
    feature_map: FeatureMap
    ridge: RidgeModel
    scaler: Scaler
    dt: float
    channel_names: tuple[str, ...]
    train_nrmse: tuple[float, ...] | None = None

    def __post_init__(self):
        obs, tgt = tuple(self.observed_channels), tuple(self.target_channels)
        object.__setattr__(self, "observed_channels", obs)
        object.__setattr__(self, "target_channels", tgt)
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        if self.feature_map.input_dim != len(obs) * self.delay_cfg.k:
            raise InvalidArgument(
                f"feature map input_dim {self.feature_map.input_dim} != |observed| * k = "
                f"{len(obs) * self.delay_cfg.k}")
        if self.ridge.d_out != len(tgt):
            raise InvalidArgument(f"ridge output width {self.ridge.d_out} != |target| = {len(tgt)}")
        if self.ridge.m != self.feature_map.m:
            raise InvalidArgument("ridge and feature map disagree on m")
        if self.scaler.offset.shape[0] != len(self.channel_names):
            raise InvalidArgument("scaler width does not match channel count")

    @property
    def k(self) -> int:
        return self.delay_cfg.k

    @property
    def closed_loop_ok(self) -> bool:
        return set(self.observed_channels) <= set(self.target_channels)

    @property
    def target_names(self) -> tuple[str, ...]:
        return tuple(self.channel_names[c] for c in self.target_channels)

    # scaled <-> physical helpers for the observed and target channel subsets
    def _scale_obs(self, x):
        idx = list(self.observed_channels)
        return (x - self.scaler.offset[idx]) / self.scaler.scale[idx]

    def _unscale_tgt(self, y):
        idx = list(self.target_channels)
        return y * self.scaler.scale[idx] + self.scaler.offset[idx]

    def _scale_tgt(self, y):
        idx = list(self.target_channels)
        return (y - self.scaler.offset[idx]) / self.scaler.scale[idx]

    def _delay_scale_vector(self):
        """Per-entry offset/scale for a composite delay vector (channel blocks of length k)."""
        idx = np.repeat(list(self.observed_channels), self.k)
        return self.scaler.offset[idx], self.scaler.scale[idx]


def train(series: TimeSeries, k: int, m: int, sigma_rff: float, lambda_reg: float,
          observed=None, target=None, seed: int = 0, scaling: str = "minmax",
          target_series: TimeSeries | None = None) -> ForecastModel:
    """Fit a forecaster on every one-step pair of ``series``.

    ``target_series`` (same shape) supplies the next-state targets instead of
    ``series`` itself, e.g. clean targets for noisy inputs.
    """
    return train_path(series, k, m, sigma_rff, [lambda_reg], observed, target, seed, scaling,
                      target_series)[0]


def train_path(series: TimeSeries, k: int, m: int, sigma_rff: float, lambdas,
               observed=None, target=None, seed: int = 0, scaling: str = "minmax",
               target_series: TimeSeries | None = None) -> list[ForecastModel]:
    """One model per regularization strength, sharing the feature map and Gram matrix."""
    cfg = DelayConfig(int(k))
    if series.n_steps < cfg.k + 2:
        raise InvalidArgument(f"series of {series.n_steps} samples too short for k={cfg.k}")
    if int(m) < 1 or not (sigma_rff > 0) or not all(lam > 0 for lam in lambdas):
        raise InvalidArgument("m, sigma_rff and lambda_reg must be positive")
    obs = _channel_list(observed, series.n_channels)
    tgt = _channel_list(target, series.n_channels)
    scaler = Scaler.fit(series.data, scaling)
    scaled = TimeSeries((series.data - scaler.offset) / scaler.scale, series.dt, series.channel_names)
    X, Y = make_training_pairs(scaled, cfg, obs, tgt)
    if target_series is not None:
        if target_series.data.shape != series.data.shape:
            raise InvalidArgument("target_series must match series shape")
        Y = (target_series.data[cfg.k:, tgt] - scaler.offset[tgt]) / scaler.scale[tgt]
    fmap = sample_feature_map(X.shape[1], int(m), float(sigma_rff), int(seed))
    Phi = transform(fmap, X)
    truth = Y * scaler.scale[tgt]
    sd = truth.std(axis=0)
    models = []
    for rm in ridge.fit_path(Phi, Y, [float(lam) for lam in lambdas]):
        fitted = (Phi @ rm.W_ridge + rm.b_ridge) * scaler.scale[tgt]
        rmse = np.sqrt(np.mean((fitted - truth) ** 2, axis=0))
        train_nrmse = tuple(float(r / s) if s > 0 else float("nan") for r, s in zip(rmse, sd))
        models.append(ForecastModel(cfg, tuple(obs), tuple(tgt), fmap, rm, scaler, series.dt,
                                    series.channel_names, train_nrmse))
    return models


def _predict_scaled(model: ForecastModel, v_scaled: np.ndarray) -> np.ndarray:
    phi = transform(model.feature_map, v_scaled[None, :])
    return ridge.predict(model.ridge, phi)[0]


def predict_one_step(model: ForecastModel, delay_vector) -> np.ndarray:
    """Next state over the target channels from one composite delay vector (physical units)."""
    v = np.asarray(delay_vector, dtype=np.float64).reshape(-1)
    if v.shape[0] != model.feature_map.input_dim:
        raise InvalidArgument(
            f"delay vector has {v.shape[0]} entries, model expects {model.feature_map.input_dim}")
    off, sc = model._delay_scale_vector()
    return model._unscale_tgt(_predict_scaled(model, (v - off) / sc))


def predict_batch(model: ForecastModel, delay_vectors, rowwise: bool = True) -> np.ndarray:
    """Predictions for stacked delay vectors.

    ``rowwise`` evaluates each row exactly as :func:`predict_one_step` (and
    :func:`rollout`) would; the blocked matrix product is faster but may
    differ from it in the last bits.
    """
    V = np.atleast_2d(np.asarray(delay_vectors, dtype=np.float64))
    if V.shape[1] != model.feature_map.input_dim:
        raise InvalidArgument(
            f"delay vectors have {V.shape[1]} entries, model expects {model.feature_map.input_dim}")
    if not rowwise:
        off, sc = model._delay_scale_vector()
        return model._unscale_tgt(ridge.predict(model.ridge, transform(model.feature_map, (V - off) / sc)))
    out = np.empty((V.shape[0], len(model.target_channels)))
    for r in range(V.shape[0]):
        out[r] = predict_one_step(model, V[r])
    return out


def one_step_predictions(model: ForecastModel, series: TimeSeries, rowwise: bool = True):
    """Teacher-forced predictions of samples k..N-1 of ``series``; returns (pred, truth)."""
    X, Y = make_training_pairs(series, model.delay_cfg, model.observed_channels, model.target_channels)
    return predict_batch(model, X, rowwise), Y


@dataclass(frozen=True, eq=False)
class RolloutResult:
    predictions: np.ndarray  # (horizon, d_out)
    per_step_error: np.ndarray | None = None  # |pred - truth|, (horizon, d_out)
    normalized_error: np.ndarray | None = None  # (horizon,)
    valid_steps: int | None = None

    @property
    def horizon(self) -> int:
        return self.predictions.shape[0]


def _window_to_vector(window: np.ndarray) -> np.ndarray:
    """(k, c) window oldest-first -> composite delay vector, newest-first per channel."""
    return window[::-1].T.reshape(-1)


def rollout(model: ForecastModel, seed_window, horizon: int, ground_truth=None,
            theta: float = DEFAULT_THETA, teacher_forced: bool = False) -> RolloutResult:
    """Closed-loop forecast of ``horizon`` steps.

    ``seed_window`` holds the last k samples (oldest first) of the observed
    channels. After each step the newest prediction of every observed channel
    is appended to its delay buffer and the oldest entry dropped. With
    ``teacher_forced`` the buffer is fed ``ground_truth`` instead.
    """
    from .metrics import normalized_step_error, valid_prediction_time

    if not model.closed_loop_ok:
        raise ClosedLoopInfeasible(
            "closed-loop rollout needs every observed channel among the targets "
            f"(observed={model.observed_channels}, target={model.target_channels})")
    horizon = int(horizon)
    if horizon < 0:
        raise InvalidArgument("horizon must be >= 0")
    k = model.k
    win = np.array(seed_window.data if isinstance(seed_window, TimeSeries) else seed_window,
                   dtype=np.float64)
    if win.ndim == 1:
        win = win[:, None]
    if win.shape != (k, len(model.observed_channels)):
        raise InvalidArgument(
            f"seed window must be k x |observed| = {(k, len(model.observed_channels))}, got {win.shape}")
    truth = None
    if ground_truth is not None:
        truth = np.array(ground_truth.data if isinstance(ground_truth, TimeSeries) else ground_truth,
                         dtype=np.float64)
        if truth.ndim == 1:
            truth = truth[:, None]
        if truth.shape[0] < horizon or truth.shape[1] != len(model.target_channels):
            raise InvalidArgument(f"ground truth must be at least {horizon} x {len(model.target_channels)}")
        truth = truth[:horizon]
    if teacher_forced and truth is None:
        raise InvalidArgument("teacher forcing requires ground truth")

    feedback = [model.target_channels.index(c) for c in model.observed_channels]
    buf = model._scale_obs(win)
    preds = np.empty((horizon, len(model.target_channels)))
    for step in range(horizon):
        y_scaled = _predict_scaled(model, _window_to_vector(buf))
        y = model._unscale_tgt(y_scaled)
        if not np.all(np.isfinite(y)):
            raise DivergenceError("rollout produced a non-finite prediction", step)
        preds[step] = y
        nxt = model._scale_tgt(truth[step]) if teacher_forced else y_scaled
        buf = np.vstack([buf[1:], nxt[feedback]])

    if truth is None:
        return RolloutResult(preds)
    err = np.abs(preds - truth)
    norm_err = normalized_step_error(truth, preds)
    steps, _ = valid_prediction_time(truth, preds, theta)
    return RolloutResult(preds, err, norm_err, steps)


def bounded_rollout_steps(model: ForecastModel, series: TimeSeries, start: int, horizon: int,
                          reference: TimeSeries | None = None, factor: float = 2.0) -> int:
    """Number of leading rollout steps from sample ``start`` whose max |prediction|
    stays within ``factor`` times the max |value| of ``reference`` (default: ``series``)."""
    ref = reference if reference is not None else series
    limit = factor * float(np.max(np.abs(ref.data[:, list(model.target_channels)])))
    k = model.k
    if start < k:
        raise InvalidArgument(f"rollout start {start} lacks {k} samples of context")
    window = series.data[start - k:start, list(model.observed_channels)]
    try:
        preds = rollout(model, window, horizon).predictions
    except DivergenceError as exc:
        return int(exc.step or 0)
    over = np.flatnonzero(np.max(np.abs(preds), axis=1) > limit)
    return int(over[0]) if over.size else int(horizon)
