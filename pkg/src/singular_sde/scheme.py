"""Implicit Euler scheme for ``dX = b(X) dt + sigma dW`` with a singular drift.

Each step solves ``x = mu + dt b(x)`` where ``mu = x_k + sigma (w_{k+1} - w_k)``.
The map ``phi(x) = mu + dt b(x) - x`` is strictly decreasing, tends to
``+inf`` at ``0+`` and to ``-inf`` at infinity, so the root is unique and
positive.  All solvers work on a batch of paths at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .drift import DriftSpec, _raw_b, _raw_b_dot
from .errors import NumericalFailure, ParameterError
from .noise import FbmPath, NoiseConfig, fgn_increments

MAX_EXPANSIONS = 200
MAX_ITER = 200
RTOL = 1e-12


@dataclass(frozen=True)
class TimeGrid:
    T: float
    n: int

    def __post_init__(self):
        if not self.T > 0:
            raise ParameterError("T must be positive")
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError("n must be a positive integer")

    @property
    def dt(self) -> float:
        return self.T / self.n

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) * (self.T / self.n)


@dataclass
class EulerPath:
    """Knots ``x_k`` of the scheme; calling the path interpolates linearly."""

    grid: TimeGrid
    knots: np.ndarray
    sigma: float = 1.0
    driver: np.ndarray | None = field(default=None, repr=False)

    def __call__(self, t):
        return np.interp(t, self.grid.times, self.knots)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def x0(self) -> float:
        return float(self.knots[0])


def _phi(spec, mu, dt, x):
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return mu + dt * _raw_b(spec, x) - x


def implicit_step_batch(spec: DriftSpec, mu, dt: float, x_start=None) -> np.ndarray:
    """Vectorised root of ``mu + dt b(x) - x = 0``, one root per entry of ``mu``.

    Bracket by halving/doubling from ``x_start``, then safeguarded Newton
    (falling back to bisection whenever Newton leaves the bracket), then one
    Newton polish.
    """
    if not dt > 0:
        raise ParameterError("dt must be positive")
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    x = np.ones_like(mu) if x_start is None else np.broadcast_to(np.asarray(x_start, float), mu.shape).copy()
    x[~(x > 0) | ~np.isfinite(x)] = 1.0
    tol_f = RTOL * np.maximum(1.0, np.abs(mu))

    f = _phi(spec, mu, dt, x)
    lo = np.where(f > 0, x, 0.0)
    hi = np.where(f < 0, x, np.inf)
    # expand the bracket
    for _ in range(MAX_EXPANSIONS):
        need_lo = lo == 0.0
        need_hi = np.isinf(hi)
        if not (need_lo.any() or need_hi.any()):
            break
        if need_lo.any():
            cand = np.where(need_lo, np.minimum(x, hi) * 0.5, 1.0)
            fc = _phi(spec, mu, dt, cand)
            lo = np.where(need_lo & (fc > 0), cand, lo)
            hi = np.where(need_lo & (fc <= 0), np.minimum(hi, cand), hi)
            x = np.where(need_lo, cand, x)
        if need_hi.any():
            cand = np.where(need_hi, np.maximum(x, lo) * 2.0, 1.0)
            fc = _phi(spec, mu, dt, cand)
            hi = np.where(need_hi & (fc < 0), cand, hi)
            lo = np.where(need_hi & (fc >= 0), np.maximum(lo, cand), lo)
            x = np.where(need_hi, cand, x)
    else:
        raise NumericalFailure("implicit step: no bracket after 200 expansions")
    if np.any(lo == 0.0) or np.any(np.isinf(hi)):
        raise NumericalFailure("implicit step: no bracket after 200 expansions")

    # safeguarded Newton on [lo, hi]
    x = np.clip(np.where(np.isfinite(f) & (x > lo) & (x < hi), x, np.sqrt(lo * hi)), lo, hi)
    active = np.ones(mu.shape, bool)
    for _ in range(MAX_ITER):
        xa, la, ha, ma = x[active], lo[active], hi[active], mu[active]
        fa = _phi(spec, ma, dt, xa)
        done = (np.abs(fa) <= tol_f[active]) | (ha - la <= RTOL * ha) | (fa == 0)
        la = np.where(fa > 0, xa, la)
        ha = np.where(fa < 0, xa, ha)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            dphi = dt * _raw_b_dot(spec, xa) - 1.0
            newton = xa - fa / dphi
        ok = np.isfinite(newton) & (newton > la) & (newton < ha)
        # geometric midpoint when the bracket spans orders of magnitude
        mid = np.where(ha > 4.0 * la, np.sqrt(la * ha), 0.5 * (la + ha))
        xn = np.where(done, xa, np.where(ok, newton, mid))
        x[active], lo[active], hi[active] = xn, la, ha
        still = ~done
        if not still.any():
            break
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    else:
        raise NumericalFailure("implicit step: root iteration did not converge")

    # one Newton polish, kept only if it improves the residual
    f = _phi(spec, mu, dt, x)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        cand = x - f / (dt * _raw_b_dot(spec, x) - 1.0)
    fc = _phi(spec, mu, dt, np.where(cand > 0, cand, x))
    better = np.isfinite(cand) & (cand > 0) & (np.abs(fc) < np.abs(f))
    return np.where(better, cand, x)


def implicit_step(spec: DriftSpec, mu: float, dt: float, x_start: float | None = None) -> float:
    """Unique positive root of ``mu + dt b(x) - x``."""
    return float(implicit_step_batch(spec, [mu], dt, None if x_start is None else [x_start])[0])


def _check_sigma_x0(sigma, x0):
    if not np.isfinite(sigma):
        raise ParameterError("sigma must be a finite real")
    if np.any(~(np.asarray(x0, dtype=float) > 0)):
        raise ParameterError("x0 must be positive")


def solve_paths(spec: DriftSpec, sigma: float, x0, dt: float, increments: np.ndarray) -> np.ndarray:
    """Scheme knots for a batch of drivers.

    ``increments`` has shape ``(P, n)``; ``x0`` is a scalar or has shape
    ``(P,)``.  Returns knots of shape ``(P, n + 1)``.
    """
    _check_sigma_x0(sigma, x0)
    inc = np.atleast_2d(np.asarray(increments, dtype=float))
    if sigma < 0:
        sigma, inc = -sigma, -inc
    P, n = inc.shape
    knots = np.empty((P, n + 1))
    knots[:, 0] = np.broadcast_to(np.asarray(x0, dtype=float), (P,))
    noise = sigma * inc
    for k in range(n):
        xk = knots[:, k]
        knots[:, k + 1] = implicit_step_batch(spec, xk + noise[:, k], dt, xk)
    return knots


def _driver_values(driver, grid: TimeGrid) -> np.ndarray:
    values = driver.values if isinstance(driver, FbmPath) else np.asarray(driver, dtype=float)
    if values.shape != (grid.n + 1,):
        raise ParameterError(f"driver must have {grid.n + 1} values on the grid, got {values.shape}")
    return values


def solve_path(spec: DriftSpec, sigma: float, x0: float, grid: TimeGrid, driver) -> EulerPath:
    """Implicit Euler knots for one driving path sampled on ``grid``.

    A negative ``sigma`` is handled by flipping the driver.
    """
    w = _driver_values(driver, grid)
    knots = solve_paths(spec, sigma, x0, grid.dt, np.diff(w)[None, :])[0]
    return EulerPath(grid=grid, knots=knots, sigma=float(sigma), driver=w)


def langevin_knots(R: float, sigma: float, y0, dt: float, increments: np.ndarray) -> np.ndarray:
    """Batched ``Y_{k+1} = (Y_k + sigma dW_k) / (1 + R dt)``."""
    if not R > 0:
        raise ParameterError("R must be positive")
    if not np.isfinite(sigma):
        raise ParameterError("sigma must be finite")
    inc = np.atleast_2d(np.asarray(increments, dtype=float))
    P, n = inc.shape
    a = 1.0 + R * dt
    Y = np.empty((P, n + 1))
    Y[:, 0] = y0
    noise = sigma * inc
    for k in range(n):
        Y[:, k + 1] = (Y[:, k] + noise[:, k]) / a
    return Y


def solve_langevin_path(R: float, sigma: float, y0: float, grid: TimeGrid, driver) -> np.ndarray:
    """Implicit Euler scheme of the Langevin equation ``dY = -R Y dt + sigma dW``."""
    w = _driver_values(driver, grid)
    return langevin_knots(R, sigma, y0, grid.dt, np.diff(w)[None, :])[0]


# ---------------------------------------------------------------------------
# convergence


def block_sum(increments: np.ndarray, factor: int) -> np.ndarray:
    """Coarsen increments along the last axis by summing blocks of ``factor``."""
    inc = np.asarray(increments)
    m = inc.shape[-1]
    if m % factor:
        raise ParameterError("block size must divide the number of increments")
    return inc.reshape(inc.shape[:-1] + (m // factor, factor)).sum(axis=-1)


def sup_error_vs_reference(coarse: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Row-wise sup distance on the reference grid, coarse paths linearly interpolated."""
    coarse = np.atleast_2d(coarse)
    reference = np.atleast_2d(reference)
    n, N = coarse.shape[1] - 1, reference.shape[1] - 1
    if N % n:
        raise ParameterError("reference resolution must be a multiple of the coarse one")
    f = N // n
    frac = (np.arange(f) / f)[None, None, :]
    left, right = coarse[:, :-1, None], coarse[:, 1:, None]
    interp = (left + (right - left) * frac).reshape(coarse.shape[0], N)
    interp = np.concatenate([interp, coarse[:, -1:]], axis=1)
    return np.max(np.abs(interp - reference), axis=1)


@dataclass
class ConvergenceResult:
    n_list: np.ndarray
    median_sup_error: np.ndarray
    q25: np.ndarray
    q75: np.ndarray
    slope: float
    errors: np.ndarray  # shape (len(n_list), reps)


def convergence_study(
    spec: DriftSpec,
    sigma: float,
    x0: float,
    H: float,
    alpha: float | None = None,
    n_list=(64, 128, 256, 512, 1024, 2048),
    reference_n: int = 16384,
    reps: int = 20,
    seed: int = 0,
    T: float = 1.0,
    method: str = "auto",
) -> ConvergenceResult:
    """Self-convergence of the scheme against a fine reference on shared noise.

    Coarse drivers are block sums of the reference increments.  The slope is a
    least-squares fit of log median error against log n.
    """
    n_list = np.asarray(sorted(int(n) for n in n_list))
    if np.any(reference_n % n_list):
        raise ParameterError("reference_n must be a multiple of every n")
    cfg = NoiseConfig(hurst=H, T=T, n=reference_n, seed=seed, method=method, holder_alpha=alpha)
    inc = fgn_increments(cfg, list(range(reps)))
    ref = solve_paths(spec, sigma, x0, T / reference_n, inc)
    errors = np.empty((len(n_list), reps))
    for i, n in enumerate(n_list):
        coarse = solve_paths(spec, sigma, x0, T / n, block_sum(inc, reference_n // n))
        errors[i] = sup_error_vs_reference(coarse, ref)
    med = np.median(errors, axis=1)
    q25, q75 = np.percentile(errors, [25, 75], axis=1)
    slope = float(np.polyfit(np.log(n_list), np.log(med), 1)[0])
    return ConvergenceResult(n_list, med, q25, q75, slope, errors)
