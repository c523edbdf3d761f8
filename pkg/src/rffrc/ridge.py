"""Centered multi-output ridge regression in closed form."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import IllConditionedError, InvalidArgument

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-8
MAX_JITTER_ESCALATIONS = 3


@dataclass(frozen=True, eq=False)
class RidgeModel:
    W_ridge: np.ndarray  # (m, d_out)
    b_ridge: np.ndarray  # (d_out,)
    lambda_reg: float
    feature_mean: np.ndarray  # (m,)
    target_mean: np.ndarray  # (d_out,)
    lambda_used: float | None = None  # differs from lambda_reg only after jitter escalation

    def __post_init__(self):
        for name in ("W_ridge", "b_ridge", "feature_mean", "target_mean"):
            arr = np.array(getattr(self, name), dtype=np.float64, order="C")
            if not np.all(np.isfinite(arr)):
                raise InvalidArgument(f"{name} contains non-finite values")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.W_ridge.ndim != 2:
            raise InvalidArgument("W_ridge must be 2-D")
        m, d_out = self.W_ridge.shape
        if self.b_ridge.shape != (d_out,) or self.target_mean.shape != (d_out,):
            raise InvalidArgument("bias / target mean width does not match W_ridge")
        if self.feature_mean.shape != (m,):
            raise InvalidArgument("feature mean length does not match W_ridge")
        if self.lambda_used is None:
            object.__setattr__(self, "lambda_used", float(self.lambda_reg))

    @property
    def m(self) -> int:
        return self.W_ridge.shape[0]

    @property
    def d_out(self) -> int:
        return self.W_ridge.shape[1]

    def predict(self, Phi) -> np.ndarray:
        return predict(self, Phi)


def _solve_spd(G: np.ndarray, rhs: np.ndarray, lam: float):
    A = G + lam * np.eye(G.shape[0])
    factor = linalg.cho_factor(A, lower=False, check_finite=False)
    W = linalg.cho_solve(factor, rhs, check_finite=False)
    scale = np.linalg.norm(rhs)
    res = np.linalg.norm(A @ W - rhs)
    if res > RESIDUAL_TOL * scale:
        # one round of iterative refinement with the same factor
        W = W + linalg.cho_solve(factor, rhs - A @ W, check_finite=False)
        res = np.linalg.norm(A @ W - rhs)
    return W, res, scale


def _validate(Phi, Y):
    Phi = np.asarray(Phi, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Phi.ndim != 2 or Phi.shape[0] != Y.shape[0]:
        raise InvalidArgument(f"Phi {Phi.shape} and Y {Y.shape} must share the row count")
    if Phi.shape[0] < 2:
        raise InvalidArgument("ridge fit needs at least 2 samples")
    if not (np.all(np.isfinite(Phi)) and np.all(np.isfinite(Y))):
        raise InvalidArgument("ridge inputs contain NaN or Inf")
    return Phi, Y


def centered_gram(Phi_c: np.ndarray, trans: int = 1) -> np.ndarray:
    """Phi_c^T Phi_c (or Phi_c Phi_c^T with ``trans=0``) via a symmetric rank-k
    update, mirrored to a full matrix."""
    upper = linalg.blas.dsyrk(1.0, Phi_c, trans=trans, lower=0)
    return np.triu(upper) + np.triu(upper, 1).T


def fit(Phi, Y, lambda_reg: float) -> RidgeModel:
    """Solve (Phi_c^T Phi_c + lambda I) W = Phi_c^T Y_c; intercept Ybar - Phibar W."""
    return fit_path(Phi, Y, [lambda_reg])[0]


def fit_path(Phi, Y, lambdas) -> list[RidgeModel]:
    """:func:`fit` for several regularization strengths sharing one Gram matrix.

    With no more samples than features the equivalent dual system
    W = Phi_c^T (Phi_c Phi_c^T + lambda I)^-1 Y_c is solved instead: it is
    smaller, and rounding in the null space of Phi_c is not amplified by 1/lambda.
    """
    Phi, Y = _validate(Phi, Y)
    for lam in lambdas:
        if not (lam > 0 and np.isfinite(lam)):
            raise InvalidArgument(f"lambda_reg must be positive, got {lam}")
    phi_mean = Phi.mean(axis=0)
    y_mean = Y.mean(axis=0)
    Phi_c = Phi - phi_mean
    dual = Phi.shape[0] <= Phi.shape[1]
    if dual:
        G, rhs = centered_gram(Phi_c, trans=0), Y - y_mean
    else:
        G, rhs = centered_gram(Phi_c), Phi_c.T @ (Y - y_mean)
    models = []
    for lam in lambdas:
        W, used = _solve_escalating(G, rhs, float(lam))
        if dual:
            W = Phi_c.T @ W
        models.append(RidgeModel(W, y_mean - phi_mean @ W, float(lam), phi_mean, y_mean, used))
    return models


def _solve_escalating(G, rhs, lambda_reg):
    """Solution of (G + lam I) X = rhs and the lam actually used."""
    lam = lambda_reg
    for attempt in range(MAX_JITTER_ESCALATIONS + 1):
        try:
            W, res, scale = _solve_spd(G, rhs, lam)
        except linalg.LinAlgError:
            res, scale = np.inf, 1.0
        if res <= RESIDUAL_TOL * scale:
            return W, lam
        if attempt == MAX_JITTER_ESCALATIONS:
            raise IllConditionedError(
                f"ridge system unsolved after {MAX_JITTER_ESCALATIONS} jitter escalations "
                f"(lambda={lam:g}, relative residual {res / scale:.3g})")
        log.warning("ridge solve at lambda=%g failed residual check (%.3g); retrying with %g",
                    lam, res / scale, 10 * lam)
        lam *= 10.0


def predict(model: RidgeModel, Phi) -> np.ndarray:
    """Phi W + b on uncentered features."""
    Phi = np.asarray(Phi, dtype=np.float64)
    squeeze = Phi.ndim == 1
    Phi = np.atleast_2d(Phi)
    if Phi.shape[1] != model.m:
        raise InvalidArgument(f"features have {Phi.shape[1]} columns, model expects {model.m}")
    out = Phi @ model.W_ridge + model.b_ridge
    return out[0] if squeeze else out
