"""Random cosine features approximating a Gaussian kernel of width ``sigma_rff``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .rng import RandomSource


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Frozen projection ``W`` (input_dim x m) and phases ``b`` (m,)."""

    W: np.ndarray
    b: np.ndarray
    sigma_rff: float
    seed: int | None = None

    def __post_init__(self):
        W = np.array(self.W, dtype=np.float64, order="C")
        b = np.array(self.b, dtype=np.float64).reshape(-1)
        if W.ndim != 2 or W.shape[0] < 1 or W.shape[1] < 1:
            raise InvalidArgument(f"W must be a non-empty matrix, got shape {W.shape}")
        if b.shape[0] != W.shape[1]:
            raise InvalidArgument(f"b has {b.shape[0]} entries, W has {W.shape[1]} columns")
        if not self.sigma_rff > 0:
            raise InvalidArgument(f"sigma_rff must be positive, got {self.sigma_rff}")
        W.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)

    @property
    def input_dim(self) -> int:
        return self.W.shape[0]

    @property
    def m(self) -> int:
        return self.W.shape[1]

    def transform(self, X) -> np.ndarray:
        return transform(self, X)


def sample_feature_map(input_dim: int, m: int, sigma_rff: float, seed: int) -> FeatureMap:
    """Draw W ~ N(0, 1/sigma_rff^2) entrywise (row-major), then b ~ U[0, 2 pi)."""
    if input_dim < 1 or m < 1:
        raise InvalidArgument(f"input_dim and m must be positive, got {input_dim}, {m}")
    if not sigma_rff > 0:
        raise InvalidArgument(f"sigma_rff must be positive, got {sigma_rff}")
    rs = RandomSource(seed)
    W = rs.normal((input_dim, m)) / sigma_rff
    b = 2.0 * np.pi * rs.uniform(m)
    return FeatureMap(W, b, float(sigma_rff), int(seed))


def transform(fmap: FeatureMap, X) -> np.ndarray:
    """sqrt(2/m) * cos(X W + b), one feature row per input row."""
    X = np.asarray(X, dtype=np.float64)
    squeeze = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != fmap.input_dim:
        raise InvalidArgument(f"input has {X.shape[1]} columns, feature map expects {fmap.input_dim}")
    Z = X @ fmap.W
    Z += fmap.b
    np.cos(Z, out=Z)
    Z *= np.sqrt(2.0 / fmap.m)
    return Z[0] if squeeze else Z


def gaussian_kernel(x, y, sigma: float) -> float:
    d = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return float(np.exp(-(d @ d) / (2.0 * sigma**2)))
