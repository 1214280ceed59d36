"""Drift-removing transforms and power changes of variable.

``theta_discrete`` maps implicit Euler knots of the singular equation onto the
implicit Euler knots of the Langevin equation ``dY = -R Y dt + sigma dW``
driven by the same noise; ``theta_continuous`` is its continuous-time
counterpart.  Both use ``b_R(x) = b(x) + R x``.

``lamperti_forward`` applies ``F_kappa(x) = x^kappa``; with the builders below
it turns the additive equation into a generalised CIR or Verhulst equation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Callable

import numpy as np

from .drift import DriftSpec, check_admissibility, eval_b, make_drift
from .errors import AdmissibilityError, ParameterError
from .scheme import EulerPath


@dataclass
class TransformReport:
    kind: str
    values: np.ndarray
    params: dict = field(default_factory=dict)
    source: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("theta_continuous", "theta_discrete", "lamperti"):
            raise ParameterError(f"unknown transform kind {self.kind!r}")
        if self.source is not None and np.shape(self.values) != np.shape(_knots_of(self.source)):
            raise ParameterError("transform output must match the input length")


def _knots_of(X):
    return X.knots if isinstance(X, EulerPath) else np.asarray(X, dtype=float)


def _b_R(spec: DriftSpec, R: float, drift_R: Callable | None):
    if drift_R is not None:
        return drift_R
    return lambda x: eval_b(spec, x) + R * x


def theta_discrete(
    spec: DriftSpec,
    X_knots,
    T: float,
    n: int,
    R: float | None = None,
    drift_R: Callable | None = None,
) -> np.ndarray:
    """``Y_k = X_k - dt sum_{i=1..k} (1 + R dt)^{i-1-k} b_R(X_i)``.

    Evaluated by the recursion ``S_k = (S_{k-1} + dt b_R(X_k)) / (1 + R dt)``.
    Works along the last axis, so a batch of paths may be passed.  ``R``
    defaults to the drift's growth constant; ``drift_R`` replaces ``b_R``.
    """
    X = np.asarray(_knots_of(X_knots), dtype=float)
    if X.shape[-1] != n + 1:
        raise ParameterError(f"expected {n + 1} knots, got {X.shape[-1]}")
    R = spec.growth_R if R is None else float(R)
    dt = T / n
    a = 1.0 + R * dt
    f = dt * np.asarray(_b_R(spec, R, drift_R)(X[..., 1:]), dtype=float)
    S = np.zeros(X.shape)
    for k in range(n):
        S[..., k + 1] = (S[..., k] + f[..., k]) / a
    return X - S


def theta_continuous(
    spec: DriftSpec,
    X,
    y0: float,
    R: float | None = None,
    drift_R: Callable | None = None,
    T: float | None = None,
) -> np.ndarray:
    """``Y_t = X_t - (x0 - y0) e^{-Rt} - int_0^t e^{-R(t-s)} b_R(X_s) ds``.

    The convolution is integrated by the trapezoid rule on the knot grid.
    ``X`` is an :class:`EulerPath` or a knot array (then ``T`` is required).
    """
    if isinstance(X, EulerPath):
        knots, T = X.knots, X.grid.T
    else:
        knots = np.asarray(X, dtype=float)
        if T is None:
            raise ParameterError("T is required when X is an array")
    R = spec.growth_R if R is None else float(R)
    n = knots.shape[-1] - 1
    dt = T / n
    t = np.arange(n + 1) * dt
    f = np.asarray(_b_R(spec, R, drift_R)(knots), dtype=float)
    e = math.exp(-R * dt)
    I = np.zeros(knots.shape)
    for k in range(n):
        I[..., k + 1] = e * I[..., k] + 0.5 * dt * (e * f[..., k] + f[..., k + 1])
    x0 = knots[..., :1]
    return knots - (x0 - y0) * np.exp(-R * t) - I


def lamperti_forward(kappa: float, X_knots) -> np.ndarray:
    """``Z = X^kappa``."""
    if kappa == 0 or not np.isfinite(kappa):
        raise ParameterError("kappa must be a nonzero real")
    X = np.asarray(_knots_of(X_knots), dtype=float)
    if np.any(~(X > 0)):
        raise ParameterError("Lamperti map needs positive knots")
    return X ** kappa


def lamperti_backward(kappa: float, Z) -> np.ndarray:
    """``X = Z^(1/kappa)``."""
    if kappa == 0 or not np.isfinite(kappa):
        raise ParameterError("kappa must be a nonzero real")
    Z = np.asarray(Z, dtype=float)
    if np.any(~(Z > 0)):
        raise ParameterError("inverse Lamperti map needs positive values")
    return Z ** (1.0 / kappa)


def lamperti_density(f_x, z, kappa: float):
    """Density of ``Z = X^kappa`` at ``z`` from a density ``f_x`` of ``X``.

    ``f_Z(z) = f_X(F^{-1}(z)) / |F'(F^{-1}(z))|``.
    """
    x = lamperti_backward(kappa, z)
    return np.asarray(f_x(x)) / np.abs(kappa * x ** (kappa - 1.0))


def _check_positive(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise ParameterError(f"{k} must be positive")


def _certify(spec, alpha):
    if alpha is None:
        return
    rep = check_admissibility(spec, alpha)
    if not rep.admissible:
        raise AdmissibilityError(rep.summary())


def build_cir_model(z0, v, w, zeta, gamma, alpha: float | None = None):
    """Additive data ``(spec, sigma, x0)`` whose image under ``x^(gamma+1)`` solves

    ``dZ = (v - w Z) dt + zeta Z^beta dB`` with ``beta = gamma / (gamma + 1)``.
    """
    _check_positive(z0=z0, v=v, w=w, gamma=gamma)
    if zeta == 0:
        raise ParameterError("zeta must be nonzero")
    one_minus_beta = 1.0 / (gamma + 1.0)
    spec = make_drift("b1", u=one_minus_beta, v=v, w=w, gamma=gamma)
    _certify(spec, alpha)
    return spec, zeta * one_minus_beta, z0 ** one_minus_beta


def build_verhulst_model(z0, v, w, zeta_star, gamma, alpha: float | None = None):
    """Additive data whose image under ``x^-(gamma+1)`` solves

    ``dZ = Z (w - v Z) dt + zeta* Z^(1 + beta*) dB`` with ``beta* = 1/(gamma+1)``.
    """
    _check_positive(z0=z0, v=v, w=w, gamma=gamma)
    if zeta_star == 0:
        raise ParameterError("zeta_star must be nonzero")
    spec = make_drift("b1", u=1.0 / (gamma + 1.0), v=v, w=w, gamma=gamma)
    _certify(spec, alpha)
    return spec, -zeta_star / (gamma + 1.0), z0 ** (-1.0 / (gamma + 1.0))
