import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from singular_sde.errors import DomainError, ParameterError, ResourceError
from singular_sde.noise import (
    NoiseConfig,
    _cholesky_factor,
    coupled_bm_fbm,
    fbm_covariance,
    fgn_autocovariance,
    fgn_increments,
    fgn_unit,
    gauss_2f1,
    make_rng,
    sample_fbm,
    sample_fbm_batch,
    sample_two_sided_fbm,
    volterra_kernel,
    volterra_matrix,
    wiener_shift,
)


class TestConfig:
    def test_rejects_bad_hurst(self):
        for h in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ParameterError):
                NoiseConfig(hurst=h)

    def test_rejects_alpha_above_hurst(self):
        with pytest.raises(ParameterError):
            NoiseConfig(hurst=0.6, holder_alpha=0.7)

    def test_rejects_bad_grid_and_method(self):
        with pytest.raises(ParameterError):
            NoiseConfig(hurst=0.7, n=1)
        with pytest.raises(ParameterError):
            NoiseConfig(hurst=0.7, T=0.0)
        with pytest.raises(ParameterError):
            NoiseConfig(hurst=0.7, method="spectral")

    def test_dt(self):
        assert NoiseConfig(hurst=0.7, T=2.0, n=8).dt == 0.25


class TestCovariance:
    def test_variance_scaling(self):
        assert fbm_covariance(2.0, 2.0, 0.7) == pytest.approx(2.0 ** 1.4)

    def test_negative_times_rejected(self):
        with pytest.raises(DomainError):
            fbm_covariance(-1.0, 1.0, 0.7)

    def test_fgn_lag_zero(self):
        assert fgn_autocovariance(0, 0.7, 0.01) == pytest.approx(0.01 ** 1.4)

    def test_fgn_brownian_uncorrelated(self):
        assert np.allclose(fgn_autocovariance(np.arange(1, 6), 0.5), 0.0)

    @given(st.lists(st.floats(0.01, 5.0), min_size=2, max_size=6, unique=True), st.floats(0.05, 0.95))
    def test_covariance_is_psd(self, times, H):
        t = np.array(times)
        C = fbm_covariance(t[:, None], t[None, :], H)
        assert np.allclose(C, C.T)
        assert np.linalg.eigvalsh(C).min() > -1e-10


class TestGeneration:
    def test_deterministic_and_batch_consistent(self):
        cfg = NoiseConfig(hurst=0.7, n=64, seed=9)
        a = sample_fbm(cfg, rep=3).values
        b = sample_fbm(cfg, rep=3).values
        batch = sample_fbm_batch(cfg, [1, 3])
        assert np.array_equal(a, b)
        assert np.array_equal(batch[1], a)

    def test_streams_are_independent_keys(self):
        a = make_rng(1, 1, 0).standard_normal(4)
        b = make_rng(1, 2, 0).standard_normal(4)
        assert not np.allclose(a, b)

    def test_path_starts_at_zero(self):
        p = sample_fbm(NoiseConfig(hurst=0.3, n=32))
        assert p.values[0] == 0.0 and len(p) == 33
        assert np.allclose(np.diff(p.values), p.increments)

    def test_cholesky_factor_reproduces_toeplitz(self):
        L = _cholesky_factor(16, 0.8)
        C = fgn_autocovariance(np.subtract.outer(np.arange(16), np.arange(16)), 0.8)
        assert np.allclose(L @ L.T, C, atol=1e-12)

    def test_cholesky_size_limit(self):
        rng = [make_rng(0)]
        with pytest.raises(ResourceError):
            fgn_unit(8193, 0.7, rng, method="cholesky")

    @pytest.mark.parametrize("method", ["circulant_embedding", "cholesky"])
    def test_increment_variance(self, method):
        cfg = NoiseConfig(hurst=0.7, n=64, seed=2, method=method)
        inc = fgn_increments(cfg, range(4000))
        # lag-0 and lag-1 sample moments against the fGn law, 5 standard errors
        v0 = np.mean(inc ** 2) / cfg.dt ** 1.4
        v1 = np.mean(inc[:, 1:] * inc[:, :-1]) / cfg.dt ** 1.4
        assert abs(v0 - 1.0) < 5 * math.sqrt(2 / inc.size) * 4
        assert abs(v1 - fgn_autocovariance(1, 0.7)) < 0.02

    def test_two_sided_origin_and_shift(self):
        cfg = NoiseConfig(hurst=0.7, T=2.0, n=8, two_sided=True, seed=1)
        p = sample_two_sided_fbm(cfg)
        assert p.times[0] == -2.0 and p.times[-1] == 2.0
        assert p.values[p.origin_index] == 0.0
        s = p.times[3]
        q = wiener_shift(p, s)
        assert q.values[3] == 0.0
        assert np.allclose(q.values - q.values[5], p.values - p.values[5])
        with pytest.raises(ParameterError):
            wiener_shift(p, 0.1)
        with pytest.raises(ParameterError):
            sample_two_sided_fbm(NoiseConfig(hurst=0.7))


class TestHypergeometric:
    @pytest.mark.parametrize("z", [-0.5, -1.0, -2.0, -10.0, -1e3])
    def test_log_identity(self, z):
        assert gauss_2f1(1, 1, 2, z) == pytest.approx(-math.log1p(-z) / z, rel=1e-13)

    @pytest.mark.parametrize(
        "a,b,c,z", [(-0.2, 0.2, 1.2, -0.75), (0.3, -0.3, 0.8, -4.0), (1.5, 0.5, 2.5, -0.1), (0.25, 1.0, 3.0, 0.0)]
    )
    def test_against_mpmath(self, a, b, c, z):
        ref = float(mpmath.hyp2f1(a, b, c, z))
        assert gauss_2f1(a, b, c, z) == pytest.approx(ref, rel=1e-12, abs=1e-15)

    def test_vectorised(self):
        z = np.array([-0.1, -3.0])
        out = gauss_2f1(1, 1, 2, z)
        assert out.shape == (2,)

    def test_rejects_positive_argument(self):
        with pytest.raises(DomainError):
            gauss_2f1(1, 1, 2, 0.5)


class TestVolterra:
    def test_frozen_value(self):
        # independent evaluation of the kernel formula in 50-digit arithmetic
        assert volterra_kernel(1.0, 0.5, 0.7) == pytest.approx(0.9747377526096476, rel=1e-13)

    def test_brownian_limit(self):
        assert volterra_kernel(1.0, 0.3, 0.5 + 1e-6) == pytest.approx(1.0, abs=1e-4)

    def test_zero_above_diagonal(self):
        assert volterra_kernel(0.5, 0.8, 0.7) == 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            volterra_kernel(1.0, 0.0, 0.7)
        with pytest.raises(ParameterError):
            volterra_kernel(1.0, 0.5, 0.4)

    def test_variance_of_kernel(self):
        # int_0^1 K(1,s)^2 ds = Gamma(2-2H) cos(pi H) / (pi H (1-2H)) for the kernel as defined
        H = 0.7
        closed = math.gamma(2 - 2 * H) * math.cos(math.pi * H) / (math.pi * H * (1 - 2 * H))
        quad = float(mpmath.quad(lambda s: volterra_kernel(1.0, float(s), H) ** 2, [0, 0.5, 1]))
        assert quad == pytest.approx(closed, rel=1e-6)
        assert closed == pytest.approx(0.995088, abs=1e-6)

    def test_matrix_rows(self):
        M = volterra_matrix(32, 1.0, 0.7)
        assert M.shape == (33, 32)
        assert np.all(M[0] == 0) and np.all(np.triu(M[:32], 0) == 0)
        assert abs(np.sum(M[-1] ** 2) / 32 - 1.0) < 0.03

    def test_coupled_path(self):
        dB, path = coupled_bm_fbm(NoiseConfig(hurst=0.7, n=64, seed=4))
        assert dB.shape == (64,) and path.values.shape == (65,)
        assert path.values[0] == 0.0
