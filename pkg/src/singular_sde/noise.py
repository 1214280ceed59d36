"""Fractional Gaussian noise and fractional Brownian motion.

Paths are synthesised from the fGn autocovariance by circulant embedding
(Davies-Harte), with an exact Cholesky fallback.  The Volterra kernel that
writes an fBm as a Wiener integral of a standard Brownian motion is also
provided, together with the Gauss hypergeometric function it needs.

Random numbers come from counter-based Philox generators keyed by
``(seed, stream, rep)`` so that replication ``rep`` is reproducible on its own,
whatever else is generated around it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np
from scipy.linalg import cholesky, toeplitz
from scipy.special import gamma as gamma_fn, hyp2f1

from .errors import DomainError, NumericalFailure, ParameterError, ResourceError

# Stream ids: one independent random stream per consumer.
STREAM_FBM = 1
STREAM_BM = 2
STREAM_MEHLER = 3
STREAM_PRICE = 4

METHODS = ("circulant_embedding", "cholesky", "auto")
CHOLESKY_MAX_N = 8192
_NEG_EIG_TOL = 1e-10


def make_rng(seed: int, stream: int = 0, rep: int = 0) -> np.random.Generator:
    """Philox generator keyed by (seed, stream, rep)."""
    if seed < 0 or stream < 0 or rep < 0:
        raise ParameterError("seed, stream and rep must be nonnegative integers")
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(stream), int(rep)])
    return np.random.Generator(np.random.Philox(ss))


def _check_hurst(hurst: float) -> float:
    hurst = float(hurst)
    if not 0.0 < hurst < 1.0:
        raise ParameterError(f"Hurst parameter must lie in (0, 1), got {hurst}")
    return hurst


@dataclass(frozen=True)
class NoiseConfig:
    """Noise generation settings.

    For one-sided paths the grid is ``t_k = k T / n`` for ``k = 0..n``.  For
    two-sided paths ``T`` is the horizon on each side and ``n`` the number of
    steps per side, so the grid is ``t_k = -T + k T / n`` for ``k = 0..2n``.
    """

    hurst: float
    T: float = 1.0
    n: int = 1024
    seed: int = 0
    method: str = "auto"
    two_sided: bool = False
    holder_alpha: float | None = None

    def __post_init__(self):
        _check_hurst(self.hurst)
        if self.holder_alpha is not None and not 0.0 < self.holder_alpha < self.hurst:
            raise ParameterError("holder_alpha must satisfy 0 < alpha < hurst")
        if not self.T > 0:
            raise ParameterError("T must be positive")
        if int(self.n) != self.n or self.n < 2:
            raise ParameterError("n must be an integer >= 2")
        if self.seed < 0:
            raise ParameterError("seed must be a nonnegative integer")
        if self.method not in METHODS:
            raise ParameterError(f"unknown method {self.method!r}; expected one of {METHODS}")

    @property
    def dt(self) -> float:
        return self.T / self.n


@dataclass
class FbmPath:
    times: np.ndarray
    values: np.ndarray
    increments: np.ndarray
    hurst: float = field(default=float("nan"))

    def __len__(self):
        return len(self.values)

    @property
    def origin_index(self) -> int:
        return int(np.argmin(np.abs(self.times)))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def fbm_covariance(s, t, H: float):
    """Covariance 0.5 (s^2H + t^2H - |t - s|^2H) of fBm, for ``s, t >= 0``."""
    H = _check_hurst(H)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise DomainError("fbm_covariance needs s, t >= 0")
    out = 0.5 * (s ** (2 * H) + t ** (2 * H) - np.abs(t - s) ** (2 * H))
    return float(out) if out.ndim == 0 else out


def fgn_autocovariance(lags, H: float, dt: float = 1.0):
    """Autocovariance of fGn increments with step ``dt`` at integer ``lags``."""
    k = np.abs(np.asarray(lags, dtype=float))
    h2 = 2.0 * H
    return 0.5 * dt ** h2 * ((k + 1) ** h2 - 2 * k ** h2 + np.abs(k - 1) ** h2)


@lru_cache(maxsize=64)
def _circulant_sqrt_eigs(n: int, H: float) -> np.ndarray | None:
    gam = fgn_autocovariance(np.arange(n + 1), H)
    row = np.concatenate([gam, gam[-2:0:-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -_NEG_EIG_TOL * lam.max():
        return None
    lam = np.clip(lam, 0.0, None)
    out = np.sqrt(lam / (2 * n))
    out.setflags(write=False)
    return out


@lru_cache(maxsize=8)
def _cholesky_factor(n: int, H: float) -> np.ndarray:
    cov = toeplitz(fgn_autocovariance(np.arange(n), H))
    L = cholesky(cov, lower=True)
    L.setflags(write=False)
    return L


def _resolve_method(n: int, H: float, method: str) -> str:
    if method == "cholesky":
        if n > CHOLESKY_MAX_N:
            raise ResourceError(f"Cholesky generation limited to n <= {CHOLESKY_MAX_N}, got {n}")
        return "cholesky"
    if _circulant_sqrt_eigs(n, H) is not None:
        return "circulant_embedding"
    if method == "circulant_embedding":
        raise NumericalFailure("negative circulant eigenvalue; use method='auto' or 'cholesky'")
    if n > CHOLESKY_MAX_N:
        raise ResourceError(f"circulant embedding failed and n={n} is too large for Cholesky")
    return "cholesky"


def fgn_unit(n: int, H: float, rngs, method: str = "auto") -> np.ndarray:
    """Unit-step fGn: one row of ``n`` increments per generator in ``rngs``.

    Row ``i`` depends only on ``rngs[i]``, which keeps batched and single-path
    generation bit-identical.
    """
    H = _check_hurst(H)
    how = _resolve_method(n, H, method)
    if how == "circulant_embedding":
        sq = _circulant_sqrt_eigs(n, H)
        Z = np.empty((len(rngs), 2 * n), dtype=complex)
        for i, g in enumerate(rngs):
            z = g.standard_normal(4 * n)
            Z[i].real = z[: 2 * n]
            Z[i].imag = z[2 * n :]
        return np.fft.fft(Z * sq, axis=1).real[:, :n]
    L = _cholesky_factor(n, H)
    return np.stack([L @ g.standard_normal(n) for g in rngs])


def fgn_increments(config: NoiseConfig, reps=(0,), stream: int = STREAM_FBM) -> np.ndarray:
    """fGn increments with step ``T/n``, shape ``(len(reps), m)``.

    ``m`` is ``n`` for one-sided configs and ``2n`` for two-sided ones.
    """
    m = 2 * config.n if config.two_sided else config.n
    rngs = [make_rng(config.seed, stream, r) for r in reps]
    return fgn_unit(m, config.hurst, rngs, config.method) * config.dt ** config.hurst


def _path_from_increments(config: NoiseConfig, inc: np.ndarray) -> FbmPath:
    if config.two_sided:
        times = -config.T + np.arange(2 * config.n + 1) * config.dt
        values = np.concatenate([[0.0], np.cumsum(inc)])
        values = values - values[config.n]
        values[config.n] = 0.0
    else:
        times = np.arange(config.n + 1) * config.dt
        values = np.concatenate([[0.0], np.cumsum(inc)])
    return FbmPath(times=times, values=values, increments=inc, hurst=config.hurst)


def sample_fbm(config: NoiseConfig, rep: int = 0) -> FbmPath:
    """One fBm path (two-sided when ``config.two_sided``)."""
    inc = fgn_increments(config, (rep,))[0]
    return _path_from_increments(config, inc)


def sample_two_sided_fbm(config: NoiseConfig, rep: int = 0) -> FbmPath:
    if not config.two_sided:
        raise ParameterError("sample_two_sided_fbm needs two_sided=True")
    return sample_fbm(config, rep)


def sample_fbm_batch(config: NoiseConfig, reps) -> np.ndarray:
    """Path values for each replication index, shape ``(len(reps), len(grid))``."""
    inc = fgn_increments(config, list(reps))
    values = np.concatenate([np.zeros((inc.shape[0], 1)), np.cumsum(inc, axis=1)], axis=1)
    if config.two_sided:
        values -= values[:, [config.n]]
        values[:, config.n] = 0.0
    return values


def wiener_shift(path: FbmPath, s: float) -> FbmPath:
    """theta_s: the path ``omega_{s + .} - omega_s`` on the shifted grid.

    ``s`` must be a grid time.
    """
    k = int(np.argmin(np.abs(path.times - s)))
    if not math.isclose(path.times[k], s, rel_tol=0.0, abs_tol=1e-9 * max(1.0, abs(s))):
        raise ParameterError("shift must be a grid time")
    return FbmPath(
        times=path.times - path.times[k],
        values=path.values - path.values[k],
        increments=path.increments.copy(),
        hurst=path.hurst,
    )


# ---------------------------------------------------------------------------
# Gauss hypergeometric function and the Volterra kernel


def gauss_2f1(a: float, b: float, c: float, z):
    """2F1(a, b; c; z) for finite ``z <= 0``, the range the Volterra kernel needs."""
    if c <= 0 and float(c).is_integer():
        raise ParameterError("c must not be a nonpositive integer")
    z = np.asarray(z, dtype=float)
    if np.any(z > 0) or np.any(~np.isfinite(z)):
        raise DomainError("gauss_2f1 is implemented for finite z <= 0")
    out = hyp2f1(a, b, c, z)
    if not np.all(np.isfinite(out)):
        raise NumericalFailure("hypergeometric evaluation returned a non-finite value")
    return float(out) if out.ndim == 0 else out


def _check_kernel_hurst(H: float) -> float:
    H = float(H)
    if not 0.5 < H < 1.0:
        raise ParameterError("the Volterra coupling is only supported for H in (1/2, 1)")
    return H


def volterra_kernel(t, s, H: float):
    """K_H(t, s) = (t-s)^(H-1/2) / Gamma(H+1/2) 2F1(1/2-H, H-1/2; H+1/2; 1-t/s) 1{s < t}."""
    H = _check_kernel_hurst(H)
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    if np.any(s <= 0) or np.any(t <= 0):
        raise DomainError("volterra_kernel needs t > 0 and s > 0")
    out = np.zeros(t.shape)
    inside = s < t
    if inside.any():
        ti, si = t[inside], s[inside]
        out[inside] = (
            (ti - si) ** (H - 0.5)
            / gamma_fn(H + 0.5)
            * gauss_2f1(0.5 - H, H - 0.5, H + 0.5, 1.0 - ti / si)
        )
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=16)
def volterra_matrix(n: int, T: float, H: float) -> np.ndarray:
    """Midpoint discretisation: ``M[k, j] = K_H(t_k, s_{j+1/2})`` for ``j < k``."""
    dt = T / n
    tk = np.arange(n + 1) * dt
    sj = (np.arange(n) + 0.5) * dt
    M = np.zeros((n + 1, n))
    rows, cols = np.tril_indices(n + 1, k=-1, m=n)
    M[rows, cols] = volterra_kernel(tk[rows], sj[cols], H)
    M.setflags(write=False)
    return M


def brownian_increments(config: NoiseConfig, reps=(0,)) -> np.ndarray:
    """Standard Brownian increments on the one-sided grid, one row per rep."""
    sd = math.sqrt(config.dt)
    return np.stack([make_rng(config.seed, STREAM_BM, r).standard_normal(config.n) * sd for r in reps])


def coupled_bm_fbm_batch(config: NoiseConfig, reps) -> tuple[np.ndarray, np.ndarray]:
    """Brownian increments and the fBm values built from them, one row per rep."""
    _check_kernel_hurst(config.hurst)
    if config.two_sided:
        raise ParameterError("coupled generation is one-sided")
    dB = brownian_increments(config, reps)
    M = volterra_matrix(config.n, float(config.T), config.hurst)
    values = np.stack([M @ row for row in dB])
    return dB, values


def coupled_bm_fbm(config: NoiseConfig, rep: int = 0) -> tuple[np.ndarray, FbmPath]:
    """Brownian increments and the coupled fBm path ``B_t = int_0^t K_H(t,s) dB*_s``."""
    dB, values = coupled_bm_fbm_batch(config, (rep,))
    times = np.arange(config.n + 1) * config.dt
    path = FbmPath(times=times, values=values[0], increments=np.diff(values[0]), hurst=config.hurst)
    return dB[0], path
