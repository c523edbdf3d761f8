"""Atomic CSV / JSON writers for experiment outputs."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .fileio import atomic_write_bytes


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(path, header, rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    atomic_write_bytes(path, buf.getvalue().encode())
    return Path(path)


def write_frame(path, data, names, dt: float = 1.0, t0: int = 0) -> Path:
    """Time-indexed matrix with header ``t,<names>``; ``t = (t0 + i) * dt``."""
    data = np.atleast_2d(np.asarray(data, dtype=np.float64)).reshape(-1, len(names))
    rows = ([(t0 + i) * dt, *row] for i, row in enumerate(data))
    return write_table(path, ["t", *names], rows)


def write_matrix(path, data) -> Path:
    """Dense matrix, no index column (rows = time, columns = grid)."""
    data = np.asarray(data, dtype=np.float64)
    return write_table(path, [f"c{j}" for j in range(data.shape[1])], data.tolist())


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    return obj


def write_json(path, obj) -> Path:
    text = json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"
    atomic_write_bytes(path, text.encode())
    return Path(path)
