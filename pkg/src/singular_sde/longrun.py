"""Long-time behaviour: ergodic averages, pullback limits, hitting times and
the contraction of same-noise pairs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .drift import DriftSpec
from .errors import ParameterError
from .noise import NoiseConfig, fgn_increments
from .scheme import EulerPath, TimeGrid, implicit_step_batch, solve_paths

# ---------------------------------------------------------------------------
# ergodic averages

PHI_REGISTRY = {
    "one": lambda x, c: np.ones_like(x),
    "identity": lambda x, c: x,
    "clip": lambda x, c: np.minimum(x, 10.0 if c is None else c),
    "power": lambda x, c: x ** (2.0 if c is None else c),
    "bounded_smooth": lambda x, c: np.tanh(x / (1.0 if c is None else c)),
}


def resolve_phi(phi):
    """Look up a test function by tag.

    Tags are ``"one"``, ``"identity"``, ``"clip"`` (x ∧ c, default c = 10),
    ``"power"`` (x^p, default p = 2) and ``"bounded_smooth"`` (tanh(x/c)).
    A parameter is given as ``"clip:5"`` or ``("clip", 5)``.
    """
    if isinstance(phi, str) and ":" in phi:
        name, arg = phi.split(":", 1)
        try:
            param = float(arg)
        except ValueError as exc:
            raise ParameterError(f"bad parameter in test function tag {phi!r}") from exc
    elif isinstance(phi, tuple):
        name, param = phi[0], float(phi[1])
    else:
        name, param = phi, None
    if name not in PHI_REGISTRY:
        raise ParameterError(f"unknown test function {name!r}; known: {sorted(PHI_REGISTRY)}")
    fn = PHI_REGISTRY[name]
    return lambda x: fn(np.asarray(x, dtype=float), param)


def ergodic_average(phi, path, T: float | None = None):
    """``(1/T) int_0^T phi(X_t) dt`` by the trapezoid rule on the knots.

    ``path`` is an :class:`EulerPath` or an array of knots (batched along the
    last axis, ``T`` required).
    """
    if isinstance(path, EulerPath):
        knots, T = path.knots, path.grid.T
    else:
        knots = np.asarray(path, dtype=float)
        if T is None:
            raise ParameterError("T is required when path is an array")
    y = resolve_phi(phi)(knots)
    n = knots.shape[-1] - 1
    out = (T / n) * (0.5 * (y[..., 0] + y[..., -1]) + y[..., 1:-1].sum(axis=-1)) / T
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# pullback


@dataclass
class PullbackRun:
    """``values[n]`` is the time-0 state of the scheme started at ``x0`` at time ``-n``."""

    values: np.ndarray
    spec: DriftSpec
    sigma: float
    seed: int
    x0: float

    @property
    def gaps(self) -> np.ndarray:
        return np.abs(np.diff(self.values))

    def decay_rate(self, n_range=range(1, 11)) -> float:
        """Minus the least-squares slope of ``log |X_n - X_{n+1}|`` over ``n_range``."""
        return fit_decay_rate(self.gaps, n_range)


def fit_decay_rate(gaps, n_range=range(1, 11), floor: float = 1e-300) -> float:
    n = np.asarray(list(n_range))
    g = np.asarray(gaps, dtype=float)[n]
    g = np.maximum(g, floor)
    return float(-np.polyfit(n, np.log(g), 1)[0])


def pullback_batch(
    spec: DriftSpec, sigma: float, x0, left_increments: np.ndarray, steps_per_unit: int, n_max: int
) -> np.ndarray:
    """Pullback values for a batch of two-sided drivers.

    ``left_increments`` holds the increments on ``[-horizon, 0]`` (shape
    ``(P, horizon * steps_per_unit)``).  All restarts are advanced together:
    the run started at ``-n`` stays at ``x0`` until its start time.
    Returns shape ``(P, n_max + 1)``.
    """
    inc = np.atleast_2d(left_increments)
    P, m = inc.shape
    need = n_max * steps_per_unit
    if need > m:
        raise ParameterError("n_max exceeds the two-sided horizon")
    inc = inc[:, m - need:]
    if sigma < 0:
        sigma, inc = -sigma, -inc
    starts = np.arange(n_max + 1)
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (P,))
    dt = 1.0 / steps_per_unit
    # row (p, n) follows driver p from time -n
    state = np.repeat(x0[:, None], n_max + 1, axis=1)
    for j in range(need):
        t_left = -n_max + j * dt
        live = starts >= -t_left - 1e-9 * dt
        if not live.any():
            continue
        sub = state[:, live]
        mu = sub + sigma * inc[:, j][:, None]
        state[:, live] = implicit_step_batch(spec, mu.ravel(), dt, sub.ravel()).reshape(sub.shape)
    return state


def pullback_sequence(
    spec: DriftSpec,
    sigma: float,
    x0: float,
    n_max: int,
    seed: int,
    hurst: float = 0.7,
    steps_per_unit: int = 256,
    method: str = "auto",
    rep: int = 0,
) -> PullbackRun:
    """Time-0 states ``X_n(x0, theta_{-n} omega)`` for ``n = 0..n_max``."""
    if n_max < 0 or int(n_max) != n_max:
        raise ParameterError("n_max must be a nonnegative integer")
    if not x0 > 0:
        raise ParameterError("x0 must be positive")
    if n_max == 0:
        return PullbackRun(np.array([float(x0)]), spec, sigma, seed, float(x0))
    cfg = NoiseConfig(hurst=hurst, T=float(n_max), n=n_max * steps_per_unit, seed=seed, method=method, two_sided=True)
    inc = fgn_increments(cfg, (rep,))
    left = inc[:, : cfg.n]
    values = pullback_batch(spec, sigma, x0, left, steps_per_unit, n_max)[0]
    return PullbackRun(values, spec, sigma, seed, float(x0))


# ---------------------------------------------------------------------------
# hitting times


def hitting_times(knots, times, level: float, t_star: float) -> np.ndarray:
    """Batched first crossing of ``level`` after ``t_star``; NaN when none.

    A path that sits exactly on the level at ``t_star`` hits at ``t_star``.
    """
    if not level > 0:
        raise ParameterError("level must be positive")
    X = np.atleast_2d(np.asarray(knots, dtype=float))
    t = np.asarray(times, dtype=float)
    if not t[0] <= t_star <= t[-1]:
        raise ParameterError("t_star must lie within the grid")
    d = X - level
    j0 = int(np.searchsorted(t, t_star, side="right"))  # first knot strictly after t_star
    # value at t_star by interpolation
    if j0 == 0:
        d_star = d[:, 0]
    else:
        i = j0 - 1
        w = (t_star - t[i]) / (t[min(j0, len(t) - 1)] - t[i]) if j0 < len(t) else 0.0
        d_star = d[:, i] + w * (d[:, min(j0, len(t) - 1)] - d[:, i])
    out = np.full(X.shape[0], np.nan)
    out[d_star == 0] = t_star
    if j0 >= len(t):
        return out
    # segments: [t_star, t_j0], [t_j0, t_j0+1], ...
    seg_t = np.concatenate([[t_star], t[j0:]])
    seg_d = np.concatenate([d_star[:, None], d[:, j0:]], axis=1)
    left, right = seg_d[:, :-1], seg_d[:, 1:]
    hit = left * right <= 0
    for p in np.flatnonzero(np.isnan(out)):
        cand = np.flatnonzero(hit[p])
        if cand.size == 0:
            continue
        k = cand[0]
        l, r = seg_d[p, k], seg_d[p, k + 1]
        if l == 0:
            out[p] = seg_t[k]
        else:
            out[p] = seg_t[k] + (seg_t[k + 1] - seg_t[k]) * l / (l - r)
    return out


def hitting_time(path: EulerPath, level: float, t_star: float):
    """First time after ``t_star`` the interpolated path reaches ``level``, or ``None``."""
    tau = hitting_times(path.knots, path.grid.times, level, t_star)[0]
    return None if np.isnan(tau) else float(tau)


# ---------------------------------------------------------------------------
# contraction


def contraction_diagnostic(spec: DriftSpec, sigma: float, x0_pair, grid: TimeGrid, driver) -> float:
    """``max_k |X^1_k - X^2_k| e^{K t_k} / |x0^1 - x0^2|`` for two starts on one driver."""
    a, b = (float(v) for v in x0_pair)
    if not (a > 0 and b > 0):
        raise ParameterError("starting points must be positive")
    if a == b:
        return 0.0
    w = driver.values if hasattr(driver, "values") else np.asarray(driver, dtype=float)
    inc = np.repeat(np.diff(w)[None, :], 2, axis=0)
    X = solve_paths(spec, sigma, np.array([a, b]), grid.dt, inc)
    ratio = np.abs(X[0] - X[1]) * np.exp(spec.contraction_K * grid.times) / abs(a - b)
    return float(ratio.max())


def contraction_excess(X1, X2, times, K: float) -> float:
    """``max_k (|X1_k - X2_k| - |X1_0 - X2_0| e^{-K t_k})``."""
    d = np.abs(np.asarray(X1) - np.asarray(X2))
    return float(np.max(d - d[..., :1] * np.exp(-K * np.asarray(times))))
