import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy.optimize import bisect

from singular_sde.drift import check_admissibility, drift_root, eval_b, eval_b_dot, make_drift
from singular_sde.errors import DomainError, ParameterError
from strategies import drift_specs as specs

xs = st.floats(1e-3, 100.0)


class TestExamples:
    def test_b1_values(self):
        s = make_drift("b1", gamma=1)
        assert eval_b(s, 1.0) == 0.0
        assert eval_b(s, 0.5) == pytest.approx(1.5)
        assert eval_b_dot(s, 1.0) == pytest.approx(-2.0)

    def test_b2_value(self):
        s = make_drift("b2", gamma=2)
        assert eval_b(s, 1.0) == pytest.approx(1 / (math.e - 1) - 1, rel=1e-14)

    @pytest.mark.parametrize("family", ["b1", "b2", "b1_plus_sin", "b2_plus_log"])
    @pytest.mark.parametrize("x", [0.3, 1.0, 3.0])
    def test_derivative_central_difference(self, family, x):
        kw = dict(lam=0.2, mu=1.0) if "_plus_" in family else {}
        s = make_drift(family, gamma=2, **kw)
        eps = 1e-6
        fd = (eval_b(s, x + eps) - eval_b(s, x - eps)) / (2 * eps)
        assert eval_b_dot(s, x) == pytest.approx(fd, rel=1e-5)

    def test_domain_errors(self):
        s = make_drift("b2", gamma=2)
        for x in (0.0, -1.0, 1e-301):
            with pytest.raises(DomainError):
                eval_b(s, x)
            with pytest.raises(DomainError):
                eval_b_dot(s, x)

    def test_b2_derivative_no_overflow_large_argument(self):
        s = make_drift("b2", gamma=2)
        assert eval_b_dot(s, 40.0) == pytest.approx(-1.0)

    def test_parameter_validation(self):
        with pytest.raises(ParameterError):
            make_drift("b3")
        with pytest.raises(ParameterError):
            make_drift("b1", u=-1)
        with pytest.raises(ParameterError):
            make_drift("b1_plus_sin", lam=0.0, mu=1.0)

    def test_lambda_alias(self):
        assert make_drift("b1_plus_sin", **{"lambda": 0.5, "mu": 1.0}).lam == 0.5


class TestConstants:
    def test_b1_constants(self):
        s = make_drift("b1", u=2.0, w=0.5)
        assert s.contraction_K == s.growth_R == 1.0

    def test_b2_constants(self):
        s = make_drift("b2", u=2.0, w=0.5)
        assert s.contraction_K == s.growth_R == 0.5

    def test_sin_constants(self):
        s = make_drift("b1_plus_sin", lam=0.25, mu=2.0)
        assert s.contraction_K == pytest.approx(0.5)
        assert s.growth_R == pytest.approx(1.5)

    def test_log_constants(self):
        s = make_drift("b2_plus_log", lam=0.5, mu=2.0)
        assert s.contraction_K == 1.0
        assert s.growth_R == pytest.approx(1 + 1 / math.e)


class TestAdmissibility:
    def test_b1_admissible(self):
        r = check_admissibility(make_drift("b1", gamma=2), 0.6)
        assert r.admissible and r.K == r.R == 1.0
        assert "K=R=uw" in r.summary()

    def test_b2_rejected(self):
        r = check_admissibility(make_drift("b2", gamma=2), 0.4)
        assert not r.admissible

    def test_sin_boundary_rejected(self):
        r = check_admissibility(make_drift("b1_plus_sin", gamma=2, lam=0.5, mu=2.0), 0.6)
        assert not r.admissible

    def test_log_needs_base_only(self):
        assert check_admissibility(make_drift("b1_plus_log", gamma=2, lam=5.0, mu=3.0), 0.6).admissible

    def test_alpha_range(self):
        with pytest.raises(ParameterError):
            check_admissibility(make_drift("b1"), 1.0)


class TestRoot:
    def test_b1_unit(self):
        for g in (0.5, 1.0, 2.0, 3.5):
            assert drift_root(make_drift("b1", gamma=g)) == pytest.approx(1.0, abs=1e-14)

    def test_b1_closed_form(self):
        assert drift_root(make_drift("b1", v=2.0, gamma=1)) == pytest.approx(math.sqrt(2), rel=1e-14)

    def test_b2_against_bisection(self):
        s = make_drift("b2", gamma=2)
        ref = bisect(lambda x: eval_b(s, x), 0.1, 5.0, xtol=1e-14)
        assert drift_root(s) == pytest.approx(ref, abs=1e-10)

    @given(specs())
    def test_root_residual(self, s):
        x = drift_root(s)
        assert x > 0
        assert abs(eval_b(s, x)) <= 1e-10 * max(1.0, abs(eval_b(s, 1.0)))


class TestProperties:
    @given(specs(), xs, xs)
    def test_strictly_decreasing(self, s, a, b):
        assume(abs(a - b) > 1e-9 * max(a, b))
        lo, hi = min(a, b), max(a, b)
        assert eval_b(s, lo) > eval_b(s, hi)

    @given(specs(), xs)
    def test_linear_lower_bound(self, s, x):
        # strict in exact arithmetic; the positive part can underflow next to R x
        assert eval_b(s, x) >= -s.growth_R * x

    @given(specs(), xs)
    def test_derivative_below_minus_K(self, s, x):
        assert eval_b_dot(s, x) < -s.contraction_K + 1e-12

    @pytest.mark.parametrize("family", ["b1", "b2"])
    def test_divergence_at_zero(self, family):
        s = make_drift(family, gamma=2)
        vals = [eval_b(s, 10.0 ** (-k)) for k in range(1, 13)]
        assert np.all(np.diff(vals) > 0) and vals[-1] > 1e20
