"""Error metrics, valid prediction time, grid search and single-axis sweeps."""

from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidArgument, RFFRCError
from .timeseries import SplitSpec, TimeSeries, segment_bounds

NORMALIZATIONS = ("std", "range")


@dataclass(frozen=True)
class MetricReport:
    per_channel_nrmse: tuple[float, ...]
    mean_nrmse: float
    valid_steps: int | None = None
    snr_gain_db: float | None = None

    def to_dict(self):
        return {"per_channel_nrmse": list(self.per_channel_nrmse), "mean_nrmse": self.mean_nrmse,
                "valid_steps": self.valid_steps, "snr_gain_db": self.snr_gain_db}


def _as2d(a):
    a = np.asarray(a.data if isinstance(a, TimeSeries) else a, dtype=np.float64)
    return a[:, None] if a.ndim == 1 else a


def nrmse(truth, pred, normalization: str = "std") -> MetricReport:
    """Per-channel RMSE over the population std (or range) of ``truth``."""
    t, p = _as2d(truth), _as2d(pred)
    if t.shape != p.shape:
        raise InvalidArgument(f"shape mismatch: truth {t.shape}, pred {p.shape}")
    if normalization == "std":
        denom = t.std(axis=0)
    elif normalization == "range":
        denom = t.max(axis=0) - t.min(axis=0)
    else:
        raise InvalidArgument(f"normalization must be one of {NORMALIZATIONS}")
    for c, s in enumerate(denom):
        if not s > 0:
            raise InvalidArgument(f"ground-truth channel {c} has zero variance")
    rmse = np.sqrt(np.mean((p - t) ** 2, axis=0))
    per = tuple(float(v) for v in rmse / denom)
    return MetricReport(per, float(np.mean(per)))


def normalized_step_error(truth, pred, scale=None) -> np.ndarray:
    """||pred_t - truth_t|| / ||std(truth)|| at every step.

    ``scale`` overrides the per-channel spread; it is also the fallback when the
    truth window is too short to have a spread.
    """
    t, p = _as2d(truth), _as2d(pred)
    if t.shape != p.shape:
        raise InvalidArgument(f"shape mismatch: truth {t.shape}, pred {p.shape}")
    if scale is None:
        scale = t.std(axis=0) if t.shape[0] > 1 else np.zeros(t.shape[1])
    denom = float(np.linalg.norm(scale))
    err = np.linalg.norm(p - t, axis=1)
    if denom == 0.0:
        return np.where(err > 0, np.inf, 0.0)
    return err / denom


def valid_prediction_time(truth, pred, theta: float = 0.4, steps_per_lyapunov: float | None = None,
                          scale=None):
    """1-based index of the first step whose normalized error exceeds ``theta``;
    the horizon if it never does.

    Returns ``(steps, lyapunov_times)``; the latter is None without a conversion constant.
    """
    if not theta > 0:
        raise InvalidArgument("theta must be positive")
    e = normalized_step_error(truth, pred, scale)
    over = np.flatnonzero(e > theta)
    steps = int(over[0]) + 1 if over.size else int(e.shape[0])
    lt = steps / steps_per_lyapunov if steps_per_lyapunov else None
    return steps, lt


# ---------------------------------------------------------------- split evaluation

@dataclass(frozen=True)
class Hyper:
    k: int
    m: int
    lambda_reg: float
    sigma_rff: float


def segment_with_context(series: TimeSeries, bounds: tuple[int, int], k: int) -> TimeSeries:
    """Segment plus the k preceding samples, so every sample in it gets a prediction."""
    start, stop = bounds
    if start - k < 0:
        raise InvalidArgument(f"segment starting at {start} lacks {k} samples of context")
    return series.segment(start - k, stop)


def fit_and_score(series: TimeSeries, split: SplitSpec, hp: Hyper, seed: int, observed=None,
                  target=None, scaling: str = "minmax", normalization: str = "std",
                  truth_series: TimeSeries | None = None, target_series: TimeSeries | None = None,
                  eval_series: TimeSeries | None = None, rowwise: bool = False):
    """Train on the train segment; one-step NRMSE on train/val/test.

    ``target_series`` replaces the training targets, ``eval_series`` the
    validation/test inputs and ``truth_series`` the validation/test targets
    (e.g. clean data when the training inputs are noisy).
    Returns ``(model, scores, preds)``.
    """
    return fit_and_score_path(series, split, hp.k, hp.m, hp.sigma_rff, [hp.lambda_reg], seed, observed,
                              target, scaling, normalization, truth_series, target_series,
                              eval_series, rowwise)[0]


def fit_and_score_path(series, split, k, m, sigma_rff, lambdas, seed, observed=None, target=None,
                       scaling="minmax", normalization="std", truth_series=None, target_series=None,
                       eval_series=None, rowwise=False):
    """:func:`fit_and_score` over several lambdas sharing features and Gram matrix."""
    from .forecaster import one_step_predictions, train_path

    b = segment_bounds(series.n_steps, split)
    tr = series.segment(*b["train"])
    tgt_tr = target_series.segment(*b["train"]) if target_series is not None else None
    models = train_path(tr, k, m, sigma_rff, lambdas, observed, target, seed, scaling, tgt_tr)
    src = eval_series if eval_series is not None else series
    out = []
    for model in models:
        scores = {"train": tuple(model.train_nrmse)}
        preds = {}
        for name in ("val", "test"):
            pred, truth = one_step_predictions(model, segment_with_context(src, b[name], k), rowwise)
            if truth_series is not None:
                truth = segment_with_context(truth_series, b[name], k).data[k:, list(model.target_channels)]
            scores[name] = nrmse(truth, pred, normalization).per_channel_nrmse
            preds[name] = (pred, truth)
        out.append((model, scores, preds))
    return out


# ---------------------------------------------------------------- grid search

@dataclass(frozen=True)
class GridSpec:
    k: tuple[int, ...]
    m: tuple[int, ...]
    lambda_reg: tuple[float, ...]
    sigma_rff: tuple[float, ...]
    seed: int = 0
    seed_policy: str = "shared"  # or "per_candidate"

    def __post_init__(self):
        for name in ("k", "m", "lambda_reg", "sigma_rff"):
            vals = tuple(getattr(self, name))
            if not vals:
                raise InvalidArgument(f"grid list {name!r} is empty")
            if any(not v > 0 for v in vals):
                raise InvalidArgument(f"grid list {name!r} has non-positive candidates")
            object.__setattr__(self, name, vals)
        if self.seed_policy not in ("shared", "per_candidate"):
            raise InvalidArgument(f"unknown seed policy {self.seed_policy!r}")

    def candidates(self) -> list[Hyper]:
        """Cartesian product in canonical (sorted) order."""
        return [Hyper(int(k), int(m), float(lam), float(s)) for k, m, lam, s in itertools.product(
            sorted(set(self.k)), sorted(set(self.m)), sorted(set(self.lambda_reg)), sorted(set(self.sigma_rff)))]


@dataclass
class GridRow:
    k: int
    m: int
    lambda_reg: float
    sigma_rff: float
    seed: int
    train_nrmse: float = math.nan
    val_nrmse: float = math.nan
    test_nrmse: float = math.nan
    wall_ms: float = math.nan
    bounded_steps: int | None = None
    stable: bool = True
    error: str | None = None

    CSV_FIELDS = ("k", "m", "lambda", "sigma", "seed", "train_nrmse", "val_nrmse", "test_nrmse", "wall_ms")

    @property
    def hyper(self) -> Hyper:
        return Hyper(self.k, self.m, self.lambda_reg, self.sigma_rff)

    @property
    def eligible(self) -> bool:
        return self.error is None and self.stable

    def sort_key(self):
        # score, then smaller m, smaller k, larger lambda, smaller sigma
        score = self.val_nrmse if self.eligible else math.inf
        return (score, self.m, self.k, -self.lambda_reg, self.sigma_rff)

    def csv_row(self):
        return [self.k, self.m, repr(self.lambda_reg), repr(self.sigma_rff), self.seed,
                repr(self.train_nrmse), repr(self.val_nrmse), repr(self.test_nrmse), f"{self.wall_ms:.1f}"]


class GridSearchError(RFFRCError):
    exit_code = 3

    def __init__(self, rows):
        causes = "; ".join(
            f"(k={r.k}, m={r.m}, lambda={r.lambda_reg:g}, sigma={r.sigma_rff:g}): "
            f"{r.error or f'rollout bounded for only {r.bounded_steps} steps'}" for r in rows)
        super().__init__(f"every grid candidate failed: {causes}")
        self.rows = rows


def n_workers() -> int:
    try:
        return max(1, int(os.environ.get("RFFRC_THREADS", "1")))
    except ValueError:
        return 1


def grid_search(series: TimeSeries, split: SplitSpec, grid: GridSpec, observed=None, target=None,
                scaling: str = "minmax", normalization: str = "std", workers: int | None = None,
                stability_steps: int | None = None):
    """Score every grid point by mean validation one-step NRMSE.

    Candidates sharing (k, m, sigma, seed) share one feature map and Gram
    matrix. With ``stability_steps``, a candidate is only eligible if its
    closed-loop rollout from the start of the validation segment stays within
    twice the training amplitude for that many steps.
    Returns ``(best_row, rows)`` with ``rows`` sorted best first.
    """
    from .forecaster import bounded_rollout_steps

    cands = grid.candidates()
    seeds = {hp: (grid.seed if grid.seed_policy == "shared" else grid.seed + i) for i, hp in enumerate(cands)}
    groups: dict[tuple, list[Hyper]] = {}
    for hp in cands:
        groups.setdefault((hp.k, hp.m, hp.sigma_rff, seeds[hp]), []).append(hp)
    b = segment_bounds(series.n_steps, split)

    def run(item):
        (k, m, sigma, seed), hps = item
        rows = [GridRow(hp.k, hp.m, hp.lambda_reg, hp.sigma_rff, seed) for hp in hps]
        t0 = time.perf_counter()
        try:
            results = fit_and_score_path(series, split, k, m, sigma, [hp.lambda_reg for hp in hps], seed,
                                         observed, target, scaling, normalization)
        except RFFRCError as exc:
            for row in rows:
                row.error = str(exc)
            results = []
        for row, (model, sc, _) in zip(rows, results):
            row.train_nrmse = float(np.mean(sc["train"]))
            row.val_nrmse = float(np.mean(sc["val"]))
            row.test_nrmse = float(np.mean(sc["test"]))
            if stability_steps:
                try:
                    row.bounded_steps = bounded_rollout_steps(model, series, b["val"][0], stability_steps,
                                                              series.segment(*b["train"]))
                except RFFRCError:
                    row.bounded_steps = 0
                row.stable = row.bounded_steps >= stability_steps
        per_row = 1e3 * (time.perf_counter() - t0) / max(len(rows), 1)
        for row in rows:
            row.wall_ms = per_row
        return rows

    workers = workers or n_workers()
    items = list(groups.items())
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            chunks = list(pool.map(run, items))
    else:
        chunks = [run(it) for it in items]
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=GridRow.sort_key)
    if not any(r.eligible for r in rows):
        raise GridSearchError(rows)
    return rows[0], rows


# ---------------------------------------------------------------- sweeps

SWEEP_AXES = ("m", "k", "sigma_rff", "lambda_reg")


@dataclass
class SweepPoint:
    value: float
    median_nrmse: float
    q25: float
    q75: float
    per_seed: list[float] = field(default_factory=list)


def sweep_single_hyperparameter(series: TimeSeries, split: SplitSpec, fixed: Hyper, axis: str, values,
                                seeds=(1, 2, 3, 4, 5), observed=None, target=None,
                                scaling: str = "minmax", normalization: str = "std") -> list[SweepPoint]:
    """Mean-over-channels test NRMSE along one axis; median and quartiles over seeds."""
    if axis not in SWEEP_AXES:
        raise InvalidArgument(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    values = list(values)
    if not values:
        raise InvalidArgument("sweep needs at least one value")
    curve = []
    for v in values:
        hp = replace(fixed, **{axis: int(v) if axis in ("k", "m") else float(v)})
        scores = []
        for s in seeds:
            _, sc, _ = fit_and_score(series, split, hp, s, observed, target, scaling, normalization)
            scores.append(float(np.mean(sc["test"])))
        q25, med, q75 = np.percentile(scores, [25, 50, 75])
        curve.append(SweepPoint(v, float(med), float(q25), float(q75), scores))
    return curve
