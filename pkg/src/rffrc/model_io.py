"""Binary model container.

Layout (all integers little-endian)::

    b"RFRC" | u32 format version | u64 metadata length | metadata (UTF-8 JSON)
    | float64 LE arrays in ``ARRAY_ORDER`` | u64 CRC-64/XZ of everything before it

Array shapes live in the metadata, so readers need no other schema.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ChecksumError, ModelFormatError, VersionError
from .features import FeatureMap
from .fileio import atomic_write_bytes
from .forecaster import ForecastModel, Scaler
from .ridge import RidgeModel
from .timeseries import DelayConfig

MAGIC = b"RFRC"
FORMAT_VERSION = 1
ARRAY_ORDER = ("W", "b", "W_ridge", "b_ridge", "feature_mean", "target_mean",
               "scaler_offset", "scaler_scale")

_CRC64_POLY = 0xC96C5795D7870F42  # ECMA-182, reflected


def _crc64_table():
    table = []
    for i in range(256):
        crc = i
        for _ in range(8):
            crc = (crc >> 1) ^ _CRC64_POLY if crc & 1 else crc >> 1
        table.append(crc)
    return table


_CRC64_TABLE = _crc64_table()


def crc64(data: bytes, crc: int = 0) -> int:
    """CRC-64/XZ (check value for b"123456789" is 0x995DC9BBDF1939FA)."""
    table = _CRC64_TABLE
    crc ^= 0xFFFFFFFFFFFFFFFF
    for byte in data:
        crc = table[(crc ^ byte) & 0xFF] ^ (crc >> 8)
    return crc ^ 0xFFFFFFFFFFFFFFFF


def _arrays(model: ForecastModel) -> dict[str, np.ndarray]:
    return {
        "W": model.feature_map.W, "b": model.feature_map.b,
        "W_ridge": model.ridge.W_ridge, "b_ridge": model.ridge.b_ridge,
        "feature_mean": model.ridge.feature_mean, "target_mean": model.ridge.target_mean,
        "scaler_offset": model.scaler.offset, "scaler_scale": model.scaler.scale,
    }


def to_bytes(model: ForecastModel) -> bytes:
    arrays = _arrays(model)
    meta = {
        "k": model.k,
        "observed_channels": list(model.observed_channels),
        "target_channels": list(model.target_channels),
        "channel_names": list(model.channel_names),
        "dt": model.dt,
        "sigma_rff": model.feature_map.sigma_rff,
        "feature_seed": model.feature_map.seed,
        "lambda_reg": model.ridge.lambda_reg,
        "lambda_used": model.ridge.lambda_used,
        "scaling": model.scaler.kind,
        "train_nrmse": list(model.train_nrmse) if model.train_nrmse is not None else None,
        "shapes": {name: list(arr.shape) for name, arr in arrays.items()},
    }
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack("<IQ", FORMAT_VERSION, len(meta_bytes)), meta_bytes]
    parts += [np.ascontiguousarray(arrays[n], dtype="<f8").tobytes() for n in ARRAY_ORDER]
    body = b"".join(parts)
    return body + struct.pack("<Q", crc64(body))


def from_bytes(blob: bytes) -> ForecastModel:
    if len(blob) < 16 + 8 or blob[:4] != MAGIC:
        raise ModelFormatError("not an RFRC model file (bad magic or too short)")
    version, meta_len = struct.unpack_from("<IQ", blob, 4)
    if version != FORMAT_VERSION:
        raise VersionError(f"model format version {version}, this build reads version {FORMAT_VERSION}")
    body, (stored,) = blob[:-8], struct.unpack("<Q", blob[-8:])
    if crc64(body) != stored:
        raise ChecksumError("model file checksum mismatch (truncated or corrupted)")
    try:
        meta = json.loads(body[16:16 + meta_len].decode("utf-8"))
        pos = 16 + meta_len
        arrays = {}
        for name in ARRAY_ORDER:
            shape = tuple(meta["shapes"][name])
            n = int(np.prod(shape)) * 8
            arrays[name] = np.frombuffer(body, dtype="<f8", count=n // 8, offset=pos).reshape(shape).astype(np.float64)
            pos += n
        if pos != len(body):
            raise ModelFormatError("model file has trailing bytes")
        fmap = FeatureMap(arrays["W"], arrays["b"], meta["sigma_rff"], meta["feature_seed"])
        rm = RidgeModel(arrays["W_ridge"], arrays["b_ridge"], meta["lambda_reg"], arrays["feature_mean"],
                        arrays["target_mean"], meta["lambda_used"])
        scaler = Scaler(arrays["scaler_offset"], arrays["scaler_scale"], meta["scaling"])
        tn = meta.get("train_nrmse")
        return ForecastModel(DelayConfig(meta["k"]), tuple(meta["observed_channels"]),
                             tuple(meta["target_channels"]), fmap, rm, scaler, meta["dt"],
                             tuple(meta["channel_names"]), tuple(tn) if tn is not None else None)
    except (KeyError, ValueError, TypeError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc


def save_model(model: ForecastModel, path) -> None:
    try:
        atomic_write_bytes(path, to_bytes(model))
    except OSError as exc:
        raise ModelFormatError(f"cannot write model to {path}: {exc}") from exc


def load_model(path) -> ForecastModel:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise ModelFormatError(f"cannot read model {path}: {exc}") from exc
    return from_bytes(blob)
