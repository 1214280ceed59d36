"""Singular drift families with an explosive limit at 0.

Families::

    b1(x)          = u (v x^-gamma - w x)
    b2(x)          = u / (exp(v x^gamma) - 1) - w x
    *_plus_sin(x)  = base(x) + lambda sin(mu x)
    *_plus_log(x)  = base(x) - lambda log(mu x)

Every family is strictly decreasing with ``b'(x) < -K`` and ``b(x) > -R x``.
Whether the explosion at 0 is strong enough for a given Hölder exponent is
decided by :func:`check_admissibility`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NumericalFailure, ParameterError

FAMILIES = ("b1", "b2", "b1_plus_sin", "b2_plus_sin", "b1_plus_log", "b2_plus_log")
X_MIN = 1e-300


@dataclass(frozen=True)
class DriftSpec:
    family: str
    u: float = 1.0
    v: float = 1.0
    w: float = 1.0
    gamma: float = 1.0
    lam: float = 0.0
    mu: float = 0.0
    contraction_K: float = field(init=False)
    growth_R: float = field(init=False)
    root_x_b: float = field(init=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown drift family {self.family!r}")
        for name in ("u", "v", "w", "gamma"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if self.perturbation is not None and not (self.lam > 0 and self.mu > 0):
            raise ParameterError("perturbed families need lambda > 0 and mu > 0")
        K = self.u * self.w if self.base == "b1" else self.w
        R = K
        if self.perturbation == "sin":
            K -= self.lam * self.mu
            R += self.lam * self.mu
        elif self.perturbation == "log":
            R += self.lam * self.mu / math.e
        object.__setattr__(self, "contraction_K", K)
        object.__setattr__(self, "growth_R", R)
        object.__setattr__(self, "root_x_b", _find_root(self))

    @property
    def base(self) -> str:
        return self.family[:2]

    @property
    def perturbation(self) -> str | None:
        return self.family[8:] if "_plus_" in self.family else None

    def b(self, x):
        return eval_b(self, x)

    def b_dot(self, x):
        return eval_b_dot(self, x)


def _as_positive(x):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr >= X_MIN)):
        raise DomainError("drift evaluated at x <= 0 (or below 1e-300)")
    return arr


def _unwrap(out):
    return float(out) if np.ndim(out) == 0 else out


def _raw_b(spec: DriftSpec, x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        if spec.base == "b1":
            out = spec.u * (spec.v * x ** (-spec.gamma) - spec.w * x)
        else:
            out = spec.u / np.expm1(spec.v * x ** spec.gamma) - spec.w * x
    if spec.perturbation == "sin":
        out = out + spec.lam * np.sin(spec.mu * x)
    elif spec.perturbation == "log":
        out = out - spec.lam * np.log(spec.mu * x)
    return out


def _raw_b_dot(spec: DriftSpec, x: np.ndarray) -> np.ndarray:
    g = spec.gamma
    with np.errstate(over="ignore"):
        if spec.base == "b1":
            out = -spec.u * (spec.v * g * x ** (-(g + 1)) + spec.w)
        else:
            # e^y / (e^y - 1)^2 = 1 / (expm1(y) * -expm1(-y)), overflow-free
            y = spec.v * x ** g
            out = -spec.u * spec.v * g * x ** (g - 1) / (np.expm1(y) * -np.expm1(-y)) - spec.w
    if spec.perturbation == "sin":
        out = out + spec.lam * spec.mu * np.cos(spec.mu * x)
    elif spec.perturbation == "log":
        out = out - spec.lam / x
    return out


def eval_b(spec: DriftSpec, x):
    """Drift value at ``x > 0`` (scalar or array)."""
    x = _as_positive(x)
    out = _raw_b(spec, x)
    if not np.all(np.isfinite(out)):
        raise DomainError("drift overflows at this x")
    return _unwrap(out)


def eval_b_dot(spec: DriftSpec, x):
    """Derivative of the drift at ``x > 0``."""
    x = _as_positive(x)
    out = _raw_b_dot(spec, x)
    if not np.all(np.isfinite(out)):
        raise DomainError("drift derivative overflows at this x")
    return _unwrap(out)


@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    K: float
    R: float
    reasons: tuple[str, ...] = ()

    def summary(self) -> str:
        verdict = "admissible" if self.admissible else "rejected"
        parts = [f"{verdict}, K={self.K:.17g}, R={self.R:.17g}"]
        parts.extend(self.reasons)
        return "; ".join(parts)


def check_admissibility(spec: DriftSpec, alpha: float) -> AdmissibilityReport:
    """Certify the family's analytic conditions for Hölder exponent ``alpha``.

    b1-based families need ``1 - alpha < alpha gamma``; b2-based ones need
    ``1 <= alpha gamma``.  A sine perturbation additionally needs
    ``lambda mu`` below the base contraction constant.
    """
    if not 0.0 < alpha < 1.0:
        raise ParameterError("alpha must lie in (0, 1)")
    reasons = []
    ag = alpha * spec.gamma
    if spec.base == "b1":
        if not 1.0 - alpha < ag:
            reasons.append(f"b1 needs 1 - alpha < alpha*gamma ({1 - alpha:.6g} >= {ag:.6g})")
        base_K = spec.u * spec.w
    else:
        if not 1.0 <= ag:
            reasons.append(f"b2 needs 1 <= alpha*gamma (alpha*gamma = {ag:.6g})")
        base_K = spec.w
    if spec.perturbation == "sin" and not spec.lam * spec.mu < base_K:
        reasons.append(f"sine perturbation needs lambda*mu < {base_K:.6g} (got {spec.lam * spec.mu:.6g})")
    if not reasons:
        if spec.base == "b1" and spec.perturbation is None:
            reasons.append("K=R=uw")
        elif spec.base == "b2" and spec.perturbation is None:
            reasons.append("K=R=w")
        return AdmissibilityReport(True, spec.contraction_K, spec.growth_R, tuple(reasons))
    return AdmissibilityReport(False, spec.contraction_K, spec.growth_R, tuple(reasons))


def _find_root(spec: DriftSpec) -> float:
    b = lambda x: float(_raw_b(spec, np.asarray(x)))
    lo = hi = 1.0
    for _ in range(200):
        if b(lo) > 0:
            break
        lo *= 0.5
    else:
        raise NumericalFailure("could not bracket the drift root from below")
    for _ in range(200):
        if b(hi) < 0:
            break
        hi *= 2.0
    else:
        raise NumericalFailure("could not bracket the drift root from above")
    if lo == hi:
        return lo
    if b(lo) <= 0:
        return lo
    root = brentq(b, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    # one Newton polish
    db = float(_raw_b_dot(spec, np.asarray(root)))
    if db < 0:
        cand = root - b(root) / db
        if lo < cand < hi and abs(b(cand)) < abs(b(root)):
            root = cand
    return root


def drift_root(spec: DriftSpec) -> float:
    """The unique ``x_b > 0`` with ``b(x_b) = 0``."""
    return spec.root_x_b


def make_drift(family: str = "b1", **params) -> DriftSpec:
    """Build a :class:`DriftSpec`; accepts ``lambda`` as an alias of ``lam``."""
    if "lambda" in params:
        params["lam"] = params.pop("lambda")
    return DriftSpec(family, **params)
