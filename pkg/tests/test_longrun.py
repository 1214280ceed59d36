import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from singular_sde.drift import drift_root, make_drift
from singular_sde.errors import ParameterError
from singular_sde.longrun import (
    contraction_diagnostic,
    contraction_excess,
    ergodic_average,
    fit_decay_rate,
    hitting_time,
    hitting_times,
    pullback_batch,
    pullback_sequence,
    resolve_phi,
)
from singular_sde.noise import NoiseConfig, sample_fbm
from singular_sde.scheme import EulerPath, TimeGrid, solve_path
from strategies import drift_specs


class TestErgodic:
    def test_constant_function(self):
        assert ergodic_average("one", np.random.default_rng(0).random(11) + 1, T=3.0) == pytest.approx(1.0)

    def test_constant_path(self):
        assert ergodic_average("power:3", np.full(9, 2.0), T=1.0) == pytest.approx(8.0)
        assert ergodic_average(("clip", 1.5), np.full(9, 2.0), T=1.0) == pytest.approx(1.5)

    def test_linear_path_trapezoid_exact(self):
        X = EulerPath(TimeGrid(2.0, 8), np.linspace(1.0, 3.0, 9))
        assert ergodic_average("identity", X) == pytest.approx(2.0)

    def test_tags(self):
        assert resolve_phi("clip")(np.array([20.0]))[0] == 10.0
        assert resolve_phi("bounded_smooth")(np.array([0.0]))[0] == 0.0
        with pytest.raises(ParameterError):
            resolve_phi("cube")
        with pytest.raises(ParameterError):
            resolve_phi("clip:x")
        with pytest.raises(ParameterError):
            ergodic_average("one", np.ones(3))

    @given(st.lists(st.floats(0.01, 100), min_size=2, max_size=40))
    def test_bounded_function_stays_in_range(self, xs):
        m = ergodic_average("bounded_smooth", np.array(xs), T=1.0)
        assert 0 < m <= 1  # tanh rounds to 1 in floating point for large x


class TestHitting:
    grid = TimeGrid(1.0, 4)

    def test_interpolated_crossing(self):
        X = EulerPath(self.grid, np.array([2.0, 1.5, 0.5, 0.4, 1.0]))
        assert hitting_time(X, 1.0, 0.0) == pytest.approx(0.375)

    def test_after_t_star(self):
        X = EulerPath(self.grid, np.array([2.0, 1.5, 0.5, 0.4, 1.0]))
        assert hitting_time(X, 1.0, 0.5) == pytest.approx(1.0)

    def test_on_level_at_t_star(self):
        X = EulerPath(self.grid, np.full(5, 1.0))
        assert hitting_time(X, 1.0, 0.3) == 0.3

    def test_no_crossing(self):
        X = EulerPath(self.grid, np.full(5, 2.0))
        assert hitting_time(X, 1.0, 0.0) is None
        assert np.isnan(hitting_times(np.full((1, 5), 2.0), self.grid.times, 1.0, 0.0)[0])

    def test_validation(self):
        with pytest.raises(ParameterError):
            hitting_times(np.ones(5), self.grid.times, 0.0, 0.0)
        with pytest.raises(ParameterError):
            hitting_times(np.ones(5), self.grid.times, 1.0, 2.0)

    @given(st.lists(st.floats(0.1, 5), min_size=5, max_size=5), st.floats(0.0, 1.0), st.floats(0.2, 4.0))
    def test_result_after_t_star_and_on_level(self, vals, t_star, level):
        X = EulerPath(self.grid, np.array(vals))
        tau = hitting_time(X, level, t_star)
        if tau is not None:
            assert t_star <= tau <= 1.0
            assert X(tau) == pytest.approx(level, rel=1e-9)


class TestPullback:
    def test_zero_horizon(self):
        run = pullback_sequence(make_drift("b1"), 0.5, 1.3, 0, seed=0)
        assert list(run.values) == [1.3]

    def test_zero_noise_converges_to_root(self):
        spec = make_drift("b2", gamma=2)
        vals = pullback_batch(spec, 0.0, 2.0, np.zeros((1, 10 * 32)), 32, 10)[0]
        assert vals[0] == 2.0
        assert abs(vals[-1] - drift_root(spec)) < 1e-3
        assert np.all(np.diff(np.abs(vals - drift_root(spec))) < 0)

    def test_gaps_decay(self):
        run = pullback_sequence(make_drift("b1", gamma=2), 0.4, 1.0, 8, seed=3, steps_per_unit=32)
        assert run.values.shape == (9,)
        assert run.decay_rate(range(1, 7)) > 1.0

    def test_fit_decay_rate(self):
        gaps = np.exp(-2.0 * np.arange(12))
        assert fit_decay_rate(gaps) == pytest.approx(2.0)

    def test_validation(self):
        with pytest.raises(ParameterError):
            pullback_sequence(make_drift("b1"), 0.5, 1.0, -1, seed=0)
        with pytest.raises(ParameterError):
            pullback_batch(make_drift("b1"), 0.5, 1.0, np.zeros((1, 10)), 4, 3)


class TestContraction:
    def test_identical_starts(self):
        grid = TimeGrid(1.0, 16)
        assert contraction_diagnostic(make_drift("b1"), 1.0, (1.0, 1.0), grid, np.zeros(17)) == 0.0

    @given(drift_specs(), st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.integers(0, 1000))
    def test_discrete_contraction_bound(self, spec, a, b, seed):
        # one scheme step shrinks the gap by at least 1/(1 + K dt)
        if abs(a - b) < 1e-6:
            return
        n = 64
        grid = TimeGrid(1.0, n)
        w = sample_fbm(NoiseConfig(hurst=0.7, n=n, seed=seed))
        r = contraction_diagnostic(spec, 0.5, (a, b), grid, w)
        K, dt = spec.contraction_K, grid.dt
        assert r <= (math.exp(K * dt) / (1 + K * dt)) ** n * (1 + 1e-9)

    def test_excess(self):
        t = np.linspace(0, 1, 5)
        X1 = 1.0 + np.exp(-t)
        X2 = np.ones(5)
        assert contraction_excess(X1, X2, t, 1.0) == pytest.approx(0.0, abs=1e-15)
        assert contraction_excess(X1, X2, t, 2.0) > 0

    def test_paths_do_not_cross(self):
        spec = make_drift("b1", gamma=2)
        grid = TimeGrid(2.0, 256)
        w = sample_fbm(NoiseConfig(hurst=0.7, T=2.0, n=256, seed=8))
        lo = solve_path(spec, 0.7, 0.5, grid, w).knots
        hi = solve_path(spec, 0.7, 2.0, grid, w).knots
        assert np.all(hi > lo)
