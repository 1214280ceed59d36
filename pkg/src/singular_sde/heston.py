"""Fractional Heston model.

Variance ``dZ = (v - w Z) dt + zeta Z^beta dB`` driven by an fBm ``B`` built
from a standard Brownian motion ``B*`` through the Volterra kernel; price
``dS = mu S dt + sqrt(Z) S dB*``.  The variance is obtained as
``Z = X^(gamma + 1)`` from the additive singular equation, and the price from
its exponential solution

    S_t = S_0 exp(int_0^t (mu_s - Z_s / 2) ds + int_0^t sqrt(Z_s) dB*_s).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .drift import make_drift
from .errors import ParameterError
from .noise import NoiseConfig, brownian_increments, coupled_bm_fbm_batch
from .scheme import TimeGrid, solve_paths
from .transform import build_cir_model, lamperti_forward


def rate_function(spec) -> Callable[[np.ndarray], np.ndarray]:
    """A constant, a callable of time, or a ``(times, values)`` table (linear interpolation)."""
    if callable(spec):
        return lambda t: np.broadcast_to(np.asarray(spec(t), dtype=float), np.shape(t))
    if isinstance(spec, (tuple, list)) and len(spec) == 2:
        tt = np.asarray(spec[0], dtype=float)
        vv = np.asarray(spec[1], dtype=float)
        if tt.shape != vv.shape or tt.ndim != 1 or np.any(np.diff(tt) <= 0):
            raise ParameterError("rate table needs increasing times and matching values")
        return lambda t: np.interp(t, tt, vv)
    try:
        c = float(spec)
    except (TypeError, ValueError) as exc:
        raise ParameterError(f"cannot interpret rate {spec!r}") from exc
    return lambda t: np.full(np.shape(t), c)


@dataclass(frozen=True)
class HestonConfig:
    S0: float = 1.0
    z0: float = 0.04
    v: float = 0.04
    w: float = 1.0
    zeta: float = 0.2
    gamma: float = 1.0
    hurst: float = 0.7
    mu: object = 0.0
    r: object = 0.0
    T: float = 1.0
    n: int = 256
    seed: int = 0
    S0_bond: float = 1.0
    method: str = "auto"
    grid: TimeGrid = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("S0", "z0", "v", "w", "gamma", "S0_bond"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if not np.isfinite(self.zeta):
            raise ParameterError("zeta must be finite")
        if not 0.5 < self.hurst < 1.0:
            raise ParameterError("the Heston variance needs H in (1/2, 1)")
        beta = self.beta
        if not 1.0 - self.hurst < beta < 1.0:
            raise ParameterError(f"beta = {beta:.6g} must lie in (1 - H, 1) = ({1 - self.hurst:.6g}, 1)")
        object.__setattr__(self, "grid", TimeGrid(self.T, self.n))

    @property
    def beta(self) -> float:
        return self.gamma / (self.gamma + 1.0)

    def noise_config(self) -> NoiseConfig:
        return NoiseConfig(hurst=self.hurst, T=self.T, n=self.n, seed=self.seed, method=self.method)


@dataclass
class VolPaths:
    Z: np.ndarray
    bm_increments: np.ndarray
    fbm: np.ndarray | None = None


def simulate_vol(config: HestonConfig, reps=(0,)) -> VolPaths:
    """Variance paths ``Z = X^(gamma + 1)`` and the Brownian increments that drive the price."""
    reps = list(reps)
    cfg = config.noise_config()
    kappa = config.gamma + 1.0
    if config.zeta == 0:
        # deterministic variance; the price still needs its Brownian motion
        spec = make_drift("b1", u=1.0 / kappa, v=config.v, w=config.w, gamma=config.gamma)
        dB = brownian_increments(cfg, reps)
        X = solve_paths(spec, 0.0, config.z0 ** (1.0 / kappa), config.grid.dt, np.zeros((1, config.n)))
        Z = np.repeat(lamperti_forward(kappa, X), len(reps), axis=0)
        return VolPaths(Z, dB, None)
    spec, sigma, x0 = build_cir_model(config.z0, config.v, config.w, config.zeta, config.gamma)
    dB, B = coupled_bm_fbm_batch(cfg, reps)
    X = solve_paths(spec, sigma, x0, config.grid.dt, np.diff(B, axis=1))
    return VolPaths(lamperti_forward(kappa, X), dB, B)


def _trapezoid_cumulative(y, dt):
    y = np.asarray(y, dtype=float)
    out = np.zeros(y.shape)
    out[..., 1:] = np.cumsum(0.5 * dt * (y[..., 1:] + y[..., :-1]), axis=-1)
    return out


def simulate_price(config: HestonConfig, Z, bm_increments) -> np.ndarray:
    """Price knots: trapezoid drift integral plus left-point Itô sum."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    dB = np.atleast_2d(np.asarray(bm_increments, dtype=float))
    n, dt = config.n, config.grid.dt
    if Z.shape[1] != n + 1 or dB.shape[1] != n or Z.shape[0] != dB.shape[0]:
        raise ParameterError("Z and Brownian increments must live on the configured grid")
    if np.any(~(Z > 0)):
        raise ParameterError("variance must be positive")
    mu = rate_function(config.mu)(config.grid.times)
    drift = _trapezoid_cumulative(mu[None, :] - 0.5 * Z, dt)
    ito = np.zeros_like(Z)
    ito[:, 1:] = np.cumsum(np.sqrt(Z[:, :-1]) * dB, axis=1)
    return config.S0 * np.exp(drift + ito)


def bond(r, times, S0_bond: float = 1.0) -> np.ndarray:
    """Riskless asset ``S^0_t = S^0_0 exp(int_0^t r_u du)``."""
    times = np.asarray(times, dtype=float)
    rr = rate_function(r)(times)
    integral = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(times) * (rr[1:] + rr[:-1]))])
    return S0_bond * np.exp(integral)


def discount(S, r, times, S0_bond: float = 1.0) -> np.ndarray:
    """``S / S^0`` on the grid."""
    return np.asarray(S, dtype=float) / bond(r, times, S0_bond)


@dataclass
class HestonResult:
    times: np.ndarray
    Z: np.ndarray
    S: np.ndarray
    S_discounted: np.ndarray


def simulate_heston(config: HestonConfig, reps=(0,)) -> HestonResult:
    vol = simulate_vol(config, reps)
    S = simulate_price(config, vol.Z, vol.bm_increments)
    times = config.grid.times
    return HestonResult(times, vol.Z, S, discount(S, config.r, times, config.S0_bond))
