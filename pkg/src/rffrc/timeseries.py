"""Uniformly sampled multichannel series, chronological splits and delay embedding."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmbeddingError, InvalidArgument
from .fileio import atomic_write_bytes


@dataclass(frozen=True)
class TimeSeries:
    """N x d block of samples taken every ``dt`` time units."""

    data: np.ndarray
    dt: float = 1.0
    channel_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise InvalidArgument(f"series data must be a non-empty N x d matrix, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise InvalidArgument("series data contains NaN or Inf")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise InvalidArgument(f"dt must be positive, got {self.dt}")
        names = tuple(self.channel_names) or tuple(f"u{i}" for i in range(data.shape[1]))
        if len(names) != data.shape[1]:
            raise InvalidArgument(f"{len(names)} channel names for {data.shape[1]} channels")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "channel_names", names)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n_steps(self) -> int:
        return self.data.shape[0]

    @property
    def n_channels(self) -> int:
        return self.data.shape[1]

    def __len__(self):
        return self.data.shape[0]

    def segment(self, start: int, stop: int) -> "TimeSeries":
        return TimeSeries(self.data[start:stop], self.dt, self.channel_names)

    def select(self, channels: Sequence[int]) -> "TimeSeries":
        idx = list(channels)
        return TimeSeries(self.data[:, idx], self.dt, tuple(self.channel_names[i] for i in idx))


@dataclass(frozen=True)
class DelayConfig:
    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise InvalidArgument(f"embedding dimension k must be a positive integer, got {self.k}")


@dataclass(frozen=True)
class SplitSpec:
    """Chronological fractions. Segment order in time is train, validation, test
    unless ``test_before_val`` is set."""

    train_frac: float = 0.6
    val_frac: float = 0.2
    test_frac: float = 0.2
    test_before_val: bool = False

    def __post_init__(self):
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(not (0.0 < f < 1.0) for f in fracs):
            raise InvalidArgument(f"split fractions must lie in (0, 1), got {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-12:
            raise InvalidArgument(f"split fractions must sum to 1, got {sum(fracs)!r}")


def _channel_list(channels, d: int) -> list[int]:
    if channels is None:
        return list(range(d))
    idx = [int(c) for c in channels]
    if not idx:
        raise InvalidArgument("channel set must be non-empty")
    for c in idx:
        if not 0 <= c < d:
            raise InvalidArgument(f"channel index {c} out of range for {d} channels")
    return idx


def _embed(x: np.ndarray, k: int, stop: int) -> np.ndarray:
    """Delay rows for 0-based times k-1 .. stop-1 of the (N, c) array ``x``."""
    n_rows = stop - k + 1
    c = x.shape[1]
    out = np.empty((n_rows, c * k), dtype=np.float64)
    for j in range(k):
        # lag j of every channel: sample index t - j
        out[:, j::k] = x[k - 1 - j: stop - j]
    return out


def delay_embed(series: TimeSeries, cfg: DelayConfig, channels=None) -> np.ndarray:
    """Stack the composite delay vectors of ``series``.

    Row ``r`` corresponds to sample ``t = r + k - 1`` (0-based) and holds, for each
    selected channel in order, ``[u(t), u(t-1), ..., u(t-k+1)]``.
    """
    k = cfg.k
    idx = _channel_list(channels, series.n_channels)
    if k > series.n_steps:
        raise EmbeddingError(f"k={k} exceeds series length {series.n_steps}")
    return _embed(series.data[:, idx], k, series.n_steps)


def make_training_pairs(series: TimeSeries, cfg: DelayConfig, observed=None, target=None):
    """One-step supervised pairs: delay vector at t over ``observed`` -> u(t+1) over ``target``."""
    k = cfg.k
    obs = _channel_list(observed, series.n_channels)
    tgt = _channel_list(target, series.n_channels)
    if k + 1 > series.n_steps:
        raise EmbeddingError(f"need at least k+1={k + 1} samples, series has {series.n_steps}")
    inputs = _embed(series.data[:, obs], k, series.n_steps - 1)
    targets = np.array(series.data[k:, tgt])
    return inputs, targets


def split_lengths(n: int, spec: SplitSpec) -> tuple[int, int, int]:
    """(train, val, test) lengths; floors for the first two segments in time, remainder to the last."""
    if spec.test_before_val:
        first, second = spec.train_frac, spec.test_frac
    else:
        first, second = spec.train_frac, spec.val_frac
    # round before flooring so 0.6 * 4000 is 2400, not 2399
    n1 = int(math.floor(round(first * n, 9)))
    n2 = int(math.floor(round(second * n, 9)))
    n3 = n - n1 - n2
    if min(n1, n2, n3) < 1:
        raise InvalidArgument(f"split {spec} of {n} samples leaves an empty segment")
    if spec.test_before_val:
        return n1, n3, n2
    return n1, n2, n3


def chronological_split(series: TimeSeries, spec: SplitSpec, min_len: int = 1):
    """Contiguous (train, val, test) segments; the middle/last assignment follows ``spec``."""
    n_train, n_val, n_test = split_lengths(series.n_steps, spec)
    if min(n_train, n_val, n_test) < min_len:
        raise InvalidArgument(
            f"segments {n_train}/{n_val}/{n_test} shorter than required {min_len} samples")
    train = series.segment(0, n_train)
    if spec.test_before_val:
        test = series.segment(n_train, n_train + n_test)
        val = series.segment(n_train + n_test, series.n_steps)
    else:
        val = series.segment(n_train, n_train + n_val)
        test = series.segment(n_train + n_val, series.n_steps)
    return train, val, test


def segment_bounds(n: int, spec: SplitSpec) -> dict[str, tuple[int, int]]:
    """Start/stop sample indices of each named segment."""
    n_train, n_val, n_test = split_lengths(n, spec)
    if spec.test_before_val:
        return {"train": (0, n_train), "test": (n_train, n_train + n_test),
                "val": (n_train + n_test, n)}
    return {"train": (0, n_train), "val": (n_train, n_train + n_val),
            "test": (n_train + n_val, n)}


def write_csv(series: TimeSeries, path, t0: int = 0) -> None:
    """Header ``t,<names>``; ``repr`` floats round-trip exactly."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", *series.channel_names])
    for i, row in enumerate(series.data):
        w.writerow([repr((t0 + i) * series.dt), *(repr(float(v)) for v in row)])
    atomic_write_bytes(path, buf.getvalue().encode())


def read_csv(path) -> TimeSeries:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "t":
        raise InvalidArgument(f"{path}: expected header starting with 't'")
    names = tuple(rows[0][1:])
    body = rows[1:]
    if not body:
        raise InvalidArgument(f"{path}: no samples")
    arr = np.array([[float(v) for v in r] for r in body], dtype=np.float64)
    t = arr[:, 0]
    dt = float(t[1] - t[0]) if len(t) > 1 else 1.0
    return TimeSeries(arr[:, 1:], dt, names)
