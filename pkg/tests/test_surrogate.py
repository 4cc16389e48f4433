import math

import numpy as np
import pytest
from scipy.stats import ks_2samp

from missionabort.distributions import Exponential, Weibull, erlang_mixture_approx
from missionabort.surrogate import (
    absorption_sample,
    build_surrogate,
    build_surrogate_deterministic,
    check_hazard_monotone,
    defective_block_monotone,
    is_tp2,
    kappa,
    model_from_json,
    model_to_json,
)
from tests.conftest import CASE_D, NU, WEIBULL_F, ZETA


class TestConstruction:
    def test_exponential_defect_time_gives_constant_jump_probability(self):
        # Memorylessness: every defective phase fails at rate lam * (1 - e^(-mu/lam)).
        mu, lam = 0.02, 0.2
        model = build_surrogate(Exponential(0.05), Exponential(mu), 0.0, m1=2, m2=6, lam=lam)
        expected = lam * (1.0 - math.exp(-mu / lam))
        np.testing.assert_allclose(model.q[2:7, -1], expected, rtol=1e-12)

    def test_single_healthy_phase(self):
        lam, zeta = 0.3, 0.01
        model = build_surrogate(Exponential(0.004), WEIBULL_F, zeta, m1=1, m2=4, lam=lam)
        np.testing.assert_allclose(model.pi0, [1.0, 0.0, 0.0, 0.0, 0.0], atol=1e-15)
        assert model.q[0, 1] == pytest.approx(lam - zeta)
        assert model.q[0, -1] == pytest.approx(zeta)

    def test_deterministic_start_variant(self, weibull_model):
        assert weibull_model.pi0[0] == 1.0
        assert weibull_model.q[0, 1] == pytest.approx(NU)
        assert weibull_model.q[0, -1] == pytest.approx(ZETA)
        assert weibull_model.q[0, 0] == pytest.approx(-(NU + ZETA))

    def test_generator_invariants(self, weibull_model, mixture_model, small_instance):
        for model in (weibull_model, mixture_model, small_instance):
            q = model.q
            np.testing.assert_allclose(q.sum(axis=1), 0.0, atol=1e-12)
            off = q - np.diag(np.diag(q))
            assert off.min() >= 0.0
            assert np.all(q[-1] == 0.0)
            assert np.all(np.tril(q, k=-1) == 0.0)

    def test_uniform_exit_rate_for_mixture_start(self):
        model = build_surrogate(Exponential(0.004), WEIBULL_F, 1e-3, m1=3, m2=10, lam=0.134)
        np.testing.assert_allclose(np.diag(model.q)[:-1], -0.134, rtol=1e-12)

    def test_rejects_saturating_defect_distribution(self):
        # All mass below the first grid point saturates the conditional CDF.
        with pytest.raises(ValueError, match="saturates"):
            build_surrogate(Exponential(0.004), Weibull(8.0, 0.01), 1e-3, m1=2, m2=10, lam=0.1)

    def test_rejects_lam_below_zeta(self):
        with pytest.raises(ValueError):
            build_surrogate(Exponential(0.004), WEIBULL_F, 0.2, m1=2, m2=5, lam=0.1)


class TestTransitionKernel:
    def test_zero_time_is_identity(self, weibull_model):
        np.testing.assert_allclose(weibull_model.kernel(0.0).p, np.eye(23), atol=1e-15)

    def test_single_exit_state_closed_form(self, small_instance):
        # State 3 exits only to absorption, so its failure probability is exponential.
        rate = -small_instance.q[2, 2]
        for t in (5.0, 25.0, 60.0):
            expected = 1.0 - math.exp(-rate * t)
            assert small_instance.kernel(t).p[2, 3] == pytest.approx(expected, rel=1e-9)
        assert small_instance.kernel(25.0).p[2, 3] == pytest.approx(0.5108, abs=2e-3)

    def test_semigroup(self, weibull_model):
        p1 = weibull_model.kernel(1.0).p
        p2 = weibull_model.kernel(2.0).p
        p3 = weibull_model.kernel(3.0).p
        assert np.max(np.abs(p1 @ p2 - p3)) < 1e-8

    def test_rows_stochastic(self, mixture_model):
        for t in (0.5, 1.0, 25.0, 185.0):
            p = mixture_model.kernel(t).p
            np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-10)
            assert p.min() >= 0.0

    def test_kernel_cache_reuses_objects(self, weibull_model):
        assert weibull_model.kernel(7.0) is weibull_model.kernel(7.0)


class TestKappa:
    def test_zero_horizon(self, weibull_model):
        rng = np.random.default_rng(0)
        belief = rng.dirichlet(np.ones(weibull_model.n_transient))
        assert kappa(weibull_model, belief, 0.0) == 0.0

    def test_last_state_closed_form(self, weibull_model):
        m = weibull_model.n_transient
        e_last = np.zeros(m)
        e_last[-1] = 1.0
        lam = weibull_model.lam
        for t in (1.0, 25.0):
            assert kappa(weibull_model, e_last, t) == pytest.approx(1.0 - math.exp(-lam * t), rel=1e-9)

    def test_matches_absorption_frequency(self, weibull_model):
        rng = np.random.default_rng(42)
        n = 100_000
        times = absorption_sample(weibull_model, rng, size=n)
        t = 185.0
        freq = float(np.mean(times <= t))
        prob = kappa(weibull_model, weibull_model.pi0, t)
        se = math.sqrt(prob * (1.0 - prob) / n)
        assert abs(freq - prob) < 3.0 * se


class TestAbsorptionSampler:
    def test_positive_times(self, small_instance):
        rng = np.random.default_rng(1)
        assert np.all(absorption_sample(small_instance, rng, size=1000) > 0.0)

    def test_matches_direct_construction(self, weibull_model):
        # Absorption must match T13 1{T13 <= T12} + (T12 + T23) 1{T13 > T12}
        # with T12 ~ Erlang(m1, nu), T23 ~ the phase mixture, T13 ~ Exp(zeta).
        rng = np.random.default_rng(2024)
        n = 100_000
        chain = absorption_sample(weibull_model, rng, size=n)

        t12 = rng.gamma(2, 1.0 / NU, size=n)
        t13 = rng.exponential(1.0 / ZETA, size=n)
        t23 = erlang_mixture_approx(WEIBULL_F, 20, weibull_model.lam).sample(rng, size=n)
        direct = np.where(t13 <= t12, t13, t12 + t23)

        stat = ks_2samp(chain, direct).statistic
        assert stat < 0.01

    def test_matches_direct_construction_mixture_case(self, mixture_model):
        from missionabort.simulation import absorption_reference_sample

        rng = np.random.default_rng(77)
        chain = absorption_sample(mixture_model, rng, size=100_000)
        direct = absorption_reference_sample(mixture_model, np.random.default_rng(78), size=100_000)
        assert ks_2samp(chain, direct).statistic < 0.01

    def test_huge_entry_rate_recovers_defect_mixture(self):
        approx = erlang_mixture_approx(WEIBULL_F, 10, 0.1)
        model = build_surrogate_deterministic(1e6, 1, WEIBULL_F, 0.0, 10, 0.1)
        rng = np.random.default_rng(5)
        n = 100_000
        chain = absorption_sample(model, rng, size=n)
        direct = approx.sample(rng, size=n)
        assert ks_2samp(chain, direct).statistic < 0.01


class TestHazardMonotone:
    def test_weibull_without_direct_failures_passes(self):
        # With zeta = 0 both certificate legs hold for the Weibull fit.
        model = build_surrogate_deterministic(NU, 2, WEIBULL_F, 0.0, 20, 0.134)
        assert check_hazard_monotone(model) is None

    def test_case_study_boundary_leg(self, weibull_model):
        # The increasing Weibull hazard starts at 0, so the first defective
        # phase fails slower than zeta: only the block certificate holds.
        assert defective_block_monotone(weibull_model)
        assert check_hazard_monotone(weibull_model) == weibull_model.m1

    def test_exponential_below_zeta_fails_at_first_defective_phase(self):
        mu, zeta, lam = 5e-4, 1e-3, 0.1
        model = build_surrogate(Exponential(0.004), Exponential(mu), zeta, m1=2, m2=5, lam=lam)
        assert check_hazard_monotone(model) == 2

    def test_decreasing_hazard_reported(self):
        model = build_surrogate(Exponential(0.004), Weibull(0.5, 100.0), 1e-5, m1=1, m2=10, lam=0.2)
        violation = check_hazard_monotone(model)
        assert violation is not None and violation > 1


class TestTp2:
    def test_identity(self):
        assert is_tp2(np.eye(4))

    def test_case_study_emissions(self):
        assert is_tp2(CASE_D)

    def test_reversed_rows_fail(self):
        assert not is_tp2(np.array([[0.101, 0.899], [0.737, 0.263]]))

    def test_step_kernel_block(self, weibull_model):
        for t in (0.5, 1.0, 5.0, 25.0):
            assert is_tp2(weibull_model.kernel(t).ptilde, tol=1e-12)

    def test_failure_column_monotone_when_hazard_monotone(self):
        model = build_surrogate_deterministic(NU, 2, WEIBULL_F, 0.0, 20, 0.134)
        assert check_hazard_monotone(model) is None
        for t in (0.5, 1.0, 5.0, 25.0):
            p_fail = model.kernel(t).p_fail
            assert np.all(np.diff(p_fail) >= -1e-12)

    def test_failure_column_monotone_on_defective_block(self, weibull_model):
        assert defective_block_monotone(weibull_model)
        for t in (0.5, 1.0, 5.0, 25.0):
            p_fail = weibull_model.kernel(t).p_fail[weibull_model.m1 :]
            assert np.all(np.diff(p_fail) >= -1e-12)


class TestJson:
    def test_roundtrip(self, weibull_model):
        clone = model_from_json(model_to_json(weibull_model))
        np.testing.assert_allclose(clone.q, weibull_model.q, atol=0)
        np.testing.assert_allclose(clone.pi0, weibull_model.pi0, atol=0)
        assert clone.m1 == weibull_model.m1
        assert clone.lam == weibull_model.lam
