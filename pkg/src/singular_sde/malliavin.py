"""Sensitivities of the solution map and a Malliavin-calculus density estimator.

* ``directional_derivative`` solves the linear equation
  ``D_t = xi + int_0^t b'(X_s) D_s ds + sigma h_t`` along a computed path.
* ``malliavin_derivative`` evaluates ``sigma 1{s <= t} exp(int_s^t b'(X_u) du)``.
* ``rkhs_inner_product`` is the inner product of the fBm reproducing kernel
  Hilbert space between step functions (``H > 1/2``).
* ``nv_density_estimate`` assembles the density of ``X_t`` from
  ``g(x) = E[<DX_t, -DL^{-1}X_t> | X_t = x]`` via

      f(x) = E|X_t - m| / (2 g(x)) exp(-int_m^x (y - m) / g(y) dy),   m = E X_t,

  with ``-DL^{-1}`` computed through the Mehler formula.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.linalg import toeplitz

from .drift import DriftSpec, _raw_b_dot
from .errors import DegenerateInputError, NumericalFailure, ParameterError
from .noise import STREAM_FBM, STREAM_MEHLER, NoiseConfig, fgn_autocovariance, fgn_unit, make_rng
from .scheme import EulerPath, TimeGrid, solve_paths


@dataclass
class DerivativePath:
    grid: TimeGrid
    values: np.ndarray
    xi: float | None = None
    h: np.ndarray | None = field(default=None, repr=False)
    s: float | None = None
    t: float | None = None


def _cumulative_trapezoid(y, dt):
    out = np.zeros(y.shape)
    out[..., 1:] = np.cumsum(0.5 * dt * (y[..., 1:] + y[..., :-1]), axis=-1)
    return out


def directional_derivative(spec: DriftSpec, X: EulerPath, xi: float, h) -> DerivativePath:
    """Derivative of the solution map in the direction ``(xi, h)``.

    With ``E = D - sigma h`` the equation reads ``E' = b'(X) (E + sigma h)``;
    on each step ``b'(X)`` and ``h`` are frozen at their trapezoid averages
    and the linear ODE is solved exactly.
    """
    h = np.asarray(h, dtype=float)
    n, dt = X.grid.n, X.grid.dt
    if h.shape != (n + 1,):
        raise ParameterError(f"h must have {n + 1} values on the grid")
    sigma = X.sigma
    bd = _raw_b_dot(spec, X.knots)
    a = 0.5 * (bd[1:] + bd[:-1])
    hbar = 0.5 * (h[1:] + h[:-1])
    growth = np.exp(a * dt)
    E = np.empty(n + 1)
    E[0] = xi
    for k in range(n):
        E[k + 1] = growth[k] * E[k] + sigma * (growth[k] - 1.0) * hbar[k]
    return DerivativePath(X.grid, E + sigma * h, xi=float(xi), h=h)


def _bdot_integral(spec, X: EulerPath):
    return _cumulative_trapezoid(_raw_b_dot(spec, X.knots), X.grid.dt)


def malliavin_derivative(spec: DriftSpec, X: EulerPath, s: float, t: float) -> float:
    """``D_s X_t = sigma 1{s <= t} exp(int_s^t b'(X_u) du)`` (trapezoid on knots)."""
    T = X.grid.T
    if not (0 <= s <= T and 0 <= t <= T):
        raise ParameterError("s and t must lie in [0, T]")
    if s > t:
        return 0.0
    C = _bdot_integral(spec, X)
    times = X.grid.times
    return float(X.sigma * math.exp(np.interp(t, times, C) - np.interp(s, times, C)))


def malliavin_row(spec: DriftSpec, X: EulerPath, t: float) -> DerivativePath:
    """``s -> D_s X_t`` on the grid."""
    C = _bdot_integral(spec, X)
    times = X.grid.times
    Ct = np.interp(t, times, C)
    vals = np.where(times <= t, X.sigma * np.exp(np.minimum(Ct - C, 0.0)), 0.0)
    return DerivativePath(X.grid, vals, t=float(t))


def scheme_gradient(spec: DriftSpec, sigma: float, knots: np.ndarray, dt: float) -> np.ndarray:
    """Exact gradient of the final knot with respect to the driving increments.

    ``dX_n / dw_j = sigma prod_{i=j+1..n} 1 / (1 - dt b'(X_i))``; batched over rows.
    """
    knots = np.atleast_2d(knots)
    ell = np.log1p(-dt * _raw_b_dot(spec, knots[:, 1:]))
    tail = np.cumsum(ell[:, ::-1], axis=1)[:, ::-1]  # sum_{i >= j+1}
    return sigma * np.exp(-tail)


# ---------------------------------------------------------------------------
# RKHS inner product


def _check_rkhs_hurst(H):
    if not 0.5 < H < 1.0:
        raise ParameterError("the kernel inner product is implemented for H in (1/2, 1)")


def rkhs_gram(n: int, H: float, T: float = 1.0) -> np.ndarray:
    """Cell-integrated kernel ``int_cell_i int_cell_j H(2H-1)|r-s|^(2H-2) dr ds``.

    Each cell integral has the closed form of the fGn autocovariance.
    """
    _check_rkhs_hurst(H)
    return toeplitz(fgn_autocovariance(np.arange(n), H, T / n))


def rkhs_inner_product(phi, psi, H: float, T: float = 1.0) -> float:
    """Inner product of two step functions given by their values on ``n`` equal cells of ``[0, T]``."""
    _check_rkhs_hurst(H)
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if phi.shape != psi.shape or phi.ndim != 1:
        raise ParameterError("step functions must be 1-d arrays on the same grid")
    G = rkhs_gram(phi.size, H, T)
    return float(phi @ G @ psi)


def indicator_step(t: float, n: int, T: float = 1.0) -> np.ndarray:
    """Cell values of ``1_[0, t]`` on ``n`` cells (partial cells weighted by overlap)."""
    edges = np.arange(n + 1) * (T / n)
    return np.clip((t - edges[:-1]) / (T / n), 0.0, 1.0)


# ---------------------------------------------------------------------------
# density estimation


@dataclass
class NVDensity:
    x: np.ndarray
    density: np.ndarray
    g_centers: np.ndarray
    g_values: np.ndarray
    mean: float
    abs_dev: float
    samples: np.ndarray = field(repr=False)
    warnings: list[str] = field(default_factory=list)


DEFAULT_MC = {"paths": 10000, "mehler_nodes": 1, "u_nodes": 16, "u_max": 8.0, "bins": 32, "n": 128, "chunk": 8192}


def _gauss_exp_nodes(m, u_max):
    z, w = np.polynomial.legendre.leggauss(m)
    u = 0.5 * u_max * (z + 1.0)
    return u, 0.5 * u_max * w * np.exp(-u)


def nv_density_estimate(
    spec: DriftSpec,
    sigma: float,
    x0: float,
    t: float,
    x_grid,
    mc: dict | None = None,
    seed: int = 0,
    hurst: float = 0.7,
    method: str = "auto",
    constant: str = "moment",
) -> NVDensity:
    """Density of the scheme's ``X_t`` from the Malliavin-calculus representation.

    ``mc`` keys: ``paths`` (outer samples), ``mehler_nodes`` (fresh paths per
    quadrature node), ``u_nodes`` and ``u_max`` (Gauss-Legendre rule for the
    ``e^{-u}`` integral), ``bins`` (equal-mass bins for ``g``), ``n`` (steps
    on ``[0, t]``) and ``chunk`` (batch size).

    ``constant="moment"`` uses the sample value of ``E|X_t - m| / 2`` as the
    prefactor; ``constant="normalized"`` uses the equivalent value
    ``1 / int exp(-int_m^x (y - m)/g) / g dx`` over ``x_grid``, which has much
    smaller Monte Carlo error when ``x_grid`` covers the bulk of the law.
    """
    if constant not in ("moment", "normalized"):
        raise ParameterError("constant must be 'moment' or 'normalized'")
    _check_rkhs_hurst(hurst)
    if not t > 0:
        raise ParameterError("t must be positive")
    opts = {**DEFAULT_MC, **(mc or {})}
    P, M, n, bins = int(opts["paths"]), int(opts["mehler_nodes"]), int(opts["n"]), int(opts["bins"])
    if P < 2 * bins:
        raise ParameterError("need at least two samples per bin")
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.ndim != 1 or x_grid.size < 2 or np.any(np.diff(x_grid) <= 0):
        raise ParameterError("x_grid must be increasing with at least two points")
    dt = t / n
    cfg = NoiseConfig(hurst=hurst, T=t, n=n, seed=seed, method=method)
    scale = dt ** hurst
    omega = fgn_unit(n, hurst, [make_rng(seed, STREAM_FBM, p) for p in range(P)], cfg.method) * scale
    knots = solve_paths(spec, sigma, x0, dt, omega)
    X = knots[:, -1]
    D = scheme_gradient(spec, sigma, knots, dt)

    u, wu = _gauss_exp_nodes(int(opts["u_nodes"]), float(opts["u_max"]))
    Psi = np.zeros((P, n))
    chunk = max(1, int(opts["chunk"]) // max(M, 1))
    for p0 in range(0, P, chunk):
        p1 = min(P, p0 + chunk)
        rngs = [make_rng(seed, STREAM_MEHLER, p) for p in range(p0, p1)]
        for q in range(u.size):
            fresh = fgn_unit(n, hurst, [r for r in rngs for _ in range(M)], cfg.method) * scale
            base = np.repeat(omega[p0:p1], M, axis=0)
            mixed = math.exp(-u[q]) * base + math.sqrt(-math.expm1(-2 * u[q])) * fresh
            kn = solve_paths(spec, sigma, x0, dt, mixed)
            Dm = scheme_gradient(spec, sigma, kn, dt).reshape(p1 - p0, M, n).mean(axis=1)
            Psi[p0:p1] += wu[q] * Dm
    Gram = rkhs_gram(n, hurst, t)
    Gval = np.einsum("pi,ij,pj->p", D, Gram, Psi)

    order = np.argsort(X)
    groups = np.array_split(order, bins)
    centers = np.array([X[g].mean() for g in groups])
    gvals = np.array([Gval[g].mean() for g in groups])
    if np.any(~(gvals > 0)):
        raise NumericalFailure("nonpositive conditional expectation estimate")
    warnings = []
    if x_grid[0] < centers[0] or x_grid[-1] > centers[-1]:
        warnings.append(
            "x_grid extends beyond the outer bin centres; g held constant there (widened end bins)"
        )
    g = np.interp(x_grid, centers, gvals)
    m = float(X.mean())
    abs_dev = float(np.mean(np.abs(X - m)))
    integrand = (x_grid - m) / g
    cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(x_grid) * (integrand[1:] + integrand[:-1]))])
    cum -= np.interp(m, x_grid, cum)
    shape = np.exp(-cum) / g
    if constant == "moment":
        dens = 0.5 * abs_dev * shape
    else:
        dens = shape / np.sum(0.5 * np.diff(x_grid) * (shape[1:] + shape[:-1]))
    return NVDensity(x_grid, dens, centers, gvals, m, abs_dev, X, warnings)


@dataclass
class Histogram:
    edges: np.ndarray
    density: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def integral(self) -> float:
        return float(np.sum(self.density * np.diff(self.edges)))


def empirical_density(samples, bins: int = 50, range=None) -> Histogram:
    """Normalised histogram over ``range`` (default: the sample range).

    Constant samples give a single narrow bin carrying all the mass.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 100:
        raise ParameterError("need at least 100 samples")
    if range is not None:
        lo, hi = map(float, range)
        if not hi > lo:
            raise DegenerateInputError("histogram range is degenerate")
        x = x[(x >= lo) & (x <= hi)]
        if x.size == 0:
            raise DegenerateInputError("no samples inside the histogram range")
        total = np.asarray(samples).size
    else:
        lo, hi = float(x.min()), float(x.max())
        total = x.size
        if lo == hi:
            half = 0.5e-9 * max(1.0, abs(lo))
            return Histogram(np.array([lo - half, hi + half]), np.array([1.0 / (2 * half)]))
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    return Histogram(edges, counts / (total * np.diff(edges)))
