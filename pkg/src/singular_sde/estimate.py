"""Quadratic variations and the Hurst / volatility estimators.

The Hurst estimator compares the lag-1 variation over ``{0, ..., n-1}`` with
the lag-2 variation over the even indices ``{0, 2, ..., 2(floor(n/2) - 1)}``:
for fBm-like increments the ratio behaves like ``2^(1 - 2H)``, hence

    h = 1/2 - log(V1 / V2) / (2 log 2).

The volatility estimate is a moment plug-in matched to ``E V1 = n sigma^2 (T/n)^(2H)``.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .drift import DriftSpec
from .errors import DegenerateInputError, ParameterError
from .transform import theta_discrete


@dataclass(frozen=True)
class EstimationResult:
    h_hat: float
    sigma_hat: float
    v1: float
    v2: float
    n: int
    T: float


def quadratic_variation(values, index_set, k: int) -> float:
    """``sum_{i in I} (W_{i+k} - W_i)^2``; needs ``k + max(I) <= n``."""
    W = np.asarray(values, dtype=float)
    n = W.shape[-1] - 1
    idx = np.asarray(index_set, dtype=int)
    if k < 0:
        raise ParameterError("lag k must be nonnegative")
    if idx.size == 0:
        return 0.0
    if idx.min() < 0 or idx.max() + k > n:
        raise ParameterError(f"index set out of range for lag {k} and n={n}")
    d = W[..., idx + k] - W[..., idx]
    out = np.sum(d * d, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def index_sets(n: int) -> tuple[np.ndarray, np.ndarray]:
    """``I1 = {0..n-1}`` (lag 1) and ``I2 = {2i : i <= floor(n/2) - 1}`` (lag 2)."""
    return np.arange(n), 2 * np.arange(n // 2)


def _variations(Y, n):
    Y = np.asarray(Y, dtype=float)
    if n < 4:
        raise ParameterError("need n >= 4")
    if Y.shape[-1] != n + 1:
        raise ParameterError(f"expected {n + 1} values, got {Y.shape[-1]}")
    I1, I2 = index_sets(n)
    v1 = quadratic_variation(Y, I1, 1)
    v2 = quadratic_variation(Y, I2, 2)
    if np.any(~(np.asarray(v1) > 0)) or np.any(~(np.asarray(v2) > 0)):
        raise DegenerateInputError("zero quadratic variation; the series is constant")
    return v1, v2


def hurst_from_variations(v1, v2):
    return 0.5 - np.log(np.asarray(v1) / np.asarray(v2)) / (2.0 * math.log(2.0))


def hurst_estimator(Y_values, n: int):
    """Hurst index estimate from a series observed at ``n + 1`` equispaced times."""
    v1, v2 = _variations(Y_values, n)
    out = hurst_from_variations(v1, v2)
    return float(out) if np.ndim(out) == 0 else out


def sigma_estimator(Y_values, h_hat, T: float, n: int):
    """``sqrt(V1 n^(2h - 1) / T^(2h))``."""
    h = np.asarray(h_hat, dtype=float)
    if np.any(~((h > 0) & (h < 1))):
        raise ParameterError("h_hat must lie in (0, 1)")
    v1, _ = _variations(Y_values, n)
    out = np.sqrt(v1 * float(n) ** (2 * h - 1) / T ** (2 * h))
    return float(out) if np.ndim(out) == 0 else out


def estimate_series(Y_values, T: float, n: int) -> EstimationResult:
    """Hurst and volatility estimates of an already drift-free series."""
    v1, v2 = _variations(Y_values, n)
    h = float(hurst_from_variations(v1, v2))
    if not 0 < h < 1:
        raise DegenerateInputError(f"Hurst estimate {h:.4g} outside (0, 1)")
    sig = sigma_estimator(Y_values, h, T, n)
    return EstimationResult(h, sig, float(v1), float(v2), int(n), float(T))


def estimate_from_observations(spec: DriftSpec, X_knots, T: float, n: int) -> EstimationResult:
    """Remove the drift with ``theta_discrete`` and estimate ``(H, sigma)``."""
    X = np.asarray(X_knots, dtype=float)
    if X.ndim != 1:
        raise ParameterError("estimate_from_observations takes one path")
    Y = theta_discrete(spec, X, T, n)
    return estimate_series(Y, T, n)
