import math

import numpy as np
import pytest
from scipy.integrate import quad

from missionabort.distributions import (
    Erlang,
    ErlangMixture,
    Exponential,
    Mixture,
    Weibull,
    distribution_from_json,
    erlang_mixture_approx,
    moment_match_rate,
    sup_norm_error,
)

WEIBULL_F = Weibull(2.3, 108.8)
MIXTURE_F = Mixture([0.5, 0.5], [Weibull(2.6, 180.8), Weibull(2.3, 36.3)])


class TestApproximant:
    def test_two_phase_exponential_weights(self):
        # beta_1 = F(1) - F(0), beta_2 = 1 - F(1) for F = Exp(0.1) at unit rate
        approx = erlang_mixture_approx(Exponential(0.1), m=2, rate=1.0)
        expected = np.array([1.0 - math.exp(-0.1), math.exp(-0.1)])
        np.testing.assert_allclose(approx.weights, expected, rtol=1e-12)

    def test_single_phase_degenerates_to_exponential(self):
        approx = erlang_mixture_approx(WEIBULL_F, m=1, rate=0.7)
        np.testing.assert_allclose(approx.weights, [1.0])
        t = np.linspace(0.0, 20.0, 101)
        np.testing.assert_allclose(approx.cdf(t), Exponential(0.7).cdf(t), atol=1e-12)

    def test_weibull_fit_quality(self):
        approx = erlang_mixture_approx(WEIBULL_F, m=20, rate=0.134)
        grid = np.linspace(0.0, 185.0, 18_501)
        gap = np.max(np.abs(approx.cdf(grid) - WEIBULL_F.cdf(grid)))
        assert gap < 0.05

    def test_weights_form_probability_vector(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            dist = Weibull(rng.uniform(0.5, 4.0), rng.uniform(5.0, 200.0))
            m = int(rng.integers(1, 40))
            approx = erlang_mixture_approx(dist, m, rng.uniform(0.02, 2.0))
            assert np.all(approx.weights >= 0.0)
            assert abs(approx.weights.sum() - 1.0) < 1e-12

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            erlang_mixture_approx(WEIBULL_F, m=0, rate=1.0)
        with pytest.raises(ValueError):
            erlang_mixture_approx(WEIBULL_F, m=5, rate=-1.0)


class TestMomentMatching:
    def test_weibull_case(self):
        assert moment_match_rate(WEIBULL_F, 20) == pytest.approx(0.134, abs=5e-3)

    def test_bimodal_mixture_case(self):
        assert moment_match_rate(MIXTURE_F, 50) == pytest.approx(0.209, abs=5e-3)

    def test_exponential_identity(self):
        assert moment_match_rate(Exponential(0.1), 1) == pytest.approx(0.1, rel=1e-9)

    def test_matched_mean(self):
        rate = moment_match_rate(WEIBULL_F, 12)
        approx = erlang_mixture_approx(WEIBULL_F, 12, rate)
        assert approx.mean() == pytest.approx(WEIBULL_F.mean(), rel=1e-9)


class TestSupNormError:
    def test_zero_for_exact_representation(self):
        mu = 0.31
        approx = ErlangMixture(rate=mu, weights=[1.0])
        assert sup_norm_error(Exponential(mu), approx, horizon=50.0) == pytest.approx(0.0, abs=1e-14)

    def test_error_shrinks_along_phase_sweep(self):
        errors = []
        for m in (5, 10, 20, 35):
            rate = moment_match_rate(WEIBULL_F, m)
            errors.append(sup_norm_error(WEIBULL_F, erlang_mixture_approx(WEIBULL_F, m, rate), 185.0))
        assert all(b <= a + 1e-3 for a, b in zip(errors, errors[1:]))

    def test_weibull_case_error(self):
        approx = erlang_mixture_approx(WEIBULL_F, 20, 0.134)
        assert sup_norm_error(WEIBULL_F, approx, 185.0) < 0.05

    def test_weak_convergence_proxy(self):
        errors = []
        for k in (2, 3, 4, 5, 6):
            m = k * k
            rate = moment_match_rate(WEIBULL_F, m)
            errors.append(sup_norm_error(WEIBULL_F, erlang_mixture_approx(WEIBULL_F, m, rate), 185.0))
        assert all(b <= a + 1e-3 for a, b in zip(errors, errors[1:]))


class TestQuantileAndSampling:
    def test_exponential_median(self):
        assert Exponential(0.1).quantile(0.5) == pytest.approx(10.0 * math.log(2.0), rel=1e-12)

    def test_weibull_roundtrip(self):
        for p in (0.01, 0.2, 0.5, 0.9, 0.999):
            assert WEIBULL_F.cdf(WEIBULL_F.quantile(p)) == pytest.approx(p, abs=1e-9)

    def test_mixture_roundtrip(self):
        for p in (0.05, 0.5, 0.95):
            assert MIXTURE_F.cdf(MIXTURE_F.quantile(p)) == pytest.approx(p, abs=1e-8)

    def test_mixture_cdf_matches_density_integral(self):
        # Independent oracle: integrate the bimodal density written out directly.
        def density(t):
            a = (1.3 / 180.8) * (t / 180.8) ** 1.6 * math.exp(-((t / 180.8) ** 2.6))
            b = (1.15 / 36.3) * (t / 36.3) ** 1.3 * math.exp(-((t / 36.3) ** 2.3))
            return a + b

        for t in (10.0, 50.0, 120.0, 200.0):
            ref, err = quad(density, 0.0, t, limit=200)
            assert err < 1e-7
            assert float(MIXTURE_F.cdf(t)) == pytest.approx(ref, abs=1e-6)

    def test_quantile_rejects_bad_levels(self):
        for p in (-0.1, 0.0, 1.0, 1.5):
            with pytest.raises(ValueError):
                WEIBULL_F.quantile(p)

    def test_mixture_sampling_matches_cdf(self):
        rng = np.random.default_rng(11)
        x = np.sort(MIXTURE_F.sample(rng, size=20_000))
        emp = np.arange(1, len(x) + 1) / len(x)
        assert np.max(np.abs(emp - MIXTURE_F.cdf(x))) < 0.015

    def test_erlang_sampling_mean(self):
        rng = np.random.default_rng(3)
        x = Erlang(4, 0.25).sample(rng, size=50_000)
        assert np.mean(x) == pytest.approx(16.0, rel=0.02)


class TestInvariants:
    def test_mixture_cdf_shape(self):
        rng = np.random.default_rng(5)
        for m, rate in ((3, 0.5), (17, 0.12), (40, 1.1)):
            w = rng.dirichlet(np.ones(m))
            em = ErlangMixture(rate, w)
            assert float(em.cdf(0.0)) == 0.0
            grid = np.sort(rng.uniform(0.0, 400.0, size=64))
            vals = em.cdf(grid)
            assert np.all(np.diff(vals) >= -1e-14)

    def test_mixture_mean_matches_survival_integral(self):
        rng = np.random.default_rng(9)
        w = rng.dirichlet(np.ones(8))
        em = ErlangMixture(0.4, w)
        ref, err = quad(lambda t: 1.0 - float(em.cdf(t)), 0.0, np.inf, limit=400)
        assert err < 1e-7
        assert em.mean() == pytest.approx(ref, rel=1e-6)

    def test_hazard_positive(self):
        t = np.linspace(0.5, 120.0, 50)
        assert np.all(np.asarray(WEIBULL_F.hazard(t)) > 0.0)


class TestJsonEncoding:
    def test_roundtrip(self):
        for dist in (Exponential(0.1), Erlang(2, 8.01e-3), WEIBULL_F, MIXTURE_F):
            clone = distribution_from_json(dist.to_json())
            t = np.linspace(0.0, 100.0, 11)
            np.testing.assert_allclose(clone.cdf(t), dist.cdf(t), atol=1e-14)

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            distribution_from_json({"kind": "cauchy", "loc": 0.0})
