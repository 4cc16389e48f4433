import math

import numpy as np
import pytest

from missionabort.beliefs import ObservationModel
from missionabort.benchmarks import (
    CPolicy,
    RPolicy,
    build_m_policy,
    c_policy_action,
    r_policy_action,
    tune_c_policy,
    tune_r_policy,
)
from missionabort.distributions import Erlang, Exponential
from missionabort.simulation import TruthSpec, rollout
from missionabort.solvers import ABORT, CONTINUE
from missionabort.values import CostModel
from tests.conftest import CASE_D, NU, WEIBULL_F, ZETA, ramp_rescue


@pytest.fixture(scope="module")
def obs():
    return ObservationModel(CASE_D)


@pytest.fixture(scope="module")
def truth(obs):
    return TruthSpec(g=Erlang(2, NU), f=WEIBULL_F, zeta=ZETA, obs=obs, delta=1.0, n_periods=160)


@pytest.fixture(scope="module")
def cost160():
    return CostModel(cs=2000.0, cm=2000.0, delta=1.0, n_periods=160, w=ramp_rescue(160))


class TestCPolicy:
    def test_hand_traced_window(self, truth, cost160):
        signals = np.array([[1, 2, 2] + [1] * 157])
        policy = CPolicy(2, 3)
        assert policy.abort_periods(signals, truth, cost160)[0] == 3

    def test_first_warning_triggers_minimal_rule(self, truth, cost160):
        rng = np.random.default_rng(0)
        signals = rng.integers(1, 3, size=(50, 160))
        periods = CPolicy(1, 1).abort_periods(signals, truth, cost160)
        for rep in range(50):
            first_warning = 1 + int(np.argmax(signals[rep] == 2))
            assert periods[rep] == first_warning

    def test_invalid_parameters_rejected(self):
        with pytest.raises(ValueError):
            CPolicy(4, 3)

    def test_action_helper(self):
        assert c_policy_action(np.array([1, 2, 2]), 2, 3) == ABORT
        assert c_policy_action(np.array([2, 1, 1]), 2, 3) == CONTINUE


class TestRPolicy:
    def test_worst_state_closed_form(self, weibull_model, cost160):
        # From the last phase, life is exponential: the median is ln2/rate.
        lam = weibull_model.lam
        median = math.log(2.0) / lam
        assert median == pytest.approx(5.17, abs=0.02)
        e_worst = np.zeros(weibull_model.n_transient)
        e_worst[-1] = 1.0
        # at n = 150 the remaining time is 10 + 25 = 35 > median: abort
        assert r_policy_action(e_worst, 150, 50.0, weibull_model, cost160) == ABORT

    def test_extreme_percentiles(self, weibull_model, cost160):
        # The tuned parameter sweeps (0, 100): a percentile near 100 demands
        # near-certain failure before aborting, one near 0 aborts on any risk.
        pi0 = weibull_model.pi0
        for n in (0, 80, 159):
            assert r_policy_action(pi0, n, 99.99, weibull_model, cost160) == CONTINUE
            assert r_policy_action(pi0, n, 0.001, weibull_model, cost160) == ABORT

    def test_quantile_roundtrip(self, weibull_model, cost160):
        # The bisected life quantile satisfies kappa(t_p) = p/100.
        from missionabort.surrogate import kappa

        pi = np.full(weibull_model.n_transient, 1.0 / weibull_model.n_transient)
        p = 37.0
        lo, hi = 0.0, 10.0 * (cost160.horizon + 25.0)
        while hi - lo > 1e-8:
            mid = 0.5 * (lo + hi)
            if kappa(weibull_model, pi, mid) < p / 100.0:
                lo = mid
            else:
                hi = mid
        assert kappa(weibull_model, pi, 0.5 * (lo + hi)) == pytest.approx(p / 100.0, abs=1e-6)

    def test_threshold_form_matches_bisection(self, weibull_model, cost160):
        rng = np.random.default_rng(2)
        policy = RPolicy(35.0, weibull_model, ObservationModel(CASE_D)).bind(cost160)
        for _ in range(50):
            n = int(rng.integers(0, 160))
            pi = rng.dirichlet(np.ones(weibull_model.n_transient))
            batch = bool(policy.abort_batch(n, pi[None, :])[0])
            pointwise = r_policy_action(pi, n, 35.0, weibull_model, cost160) == ABORT
            assert batch == pointwise


class TestMPolicy:
    def test_case_study_rates(self, cost160, obs):
        bench = build_m_policy(Erlang(2, NU), WEIBULL_F, ZETA, cost160, obs)
        assert bench.params["q01"] == pytest.approx(4.005e-3, rel=1e-3)
        assert bench.params["q02"] == pytest.approx(1e-3)
        assert bench.params["q12"] == pytest.approx(1.038e-2, rel=1e-3)

    def test_exponential_sojourns_make_approximation_exact(self, cost160, obs):
        g = Exponential(4.0e-3)
        f = Exponential(1.04e-2)
        bench = build_m_policy(g, f, 1e-3, cost160, obs)
        assert bench.params["q01"] == pytest.approx(4.0e-3)
        assert bench.params["q12"] == pytest.approx(1.04e-2)

    def test_mean_roundtrip(self, cost160, obs):
        bench = build_m_policy(Erlang(2, NU), WEIBULL_F, ZETA, cost160, obs)
        assert 1.0 / bench.params["q12"] == pytest.approx(WEIBULL_F.mean(), rel=1e-9)


class TestTuning:
    def test_degenerate_grid_returns_single_point(self, truth, cost160):
        bench = tune_c_policy(truth, cost160, reps=500, seed=3, grid=[(2, 4)])
        assert bench.params == {"m_check": 2, "n_check": 4, "cutoff": None}
        assert len(bench.tuning) == 1

    def test_tuning_deterministic(self, truth, cost160):
        b1 = tune_c_policy(truth, cost160, reps=1000, seed=4)
        b2 = tune_c_policy(truth, cost160, reps=1000, seed=4)
        assert b1.params == b2.params
        assert b1.tuning == b2.tuning

    def test_r_policy_grid_search(self, truth, cost160, weibull_model, obs):
        bench = tune_r_policy(
            truth, cost160, weibull_model, obs, reps=800, seed=5, grid=np.array([5.0, 35.0, 80.0])
        )
        assert bench.params["p"] in (5.0, 35.0, 80.0)
        assert len(bench.tuning) == 3
        best_row = min(bench.tuning, key=lambda r: r["mean_cost"])
        assert bench.params["p"] == best_row["p"]

    def test_tuned_c_policy_is_grid_minimum(self, truth, cost160):
        bench = tune_c_policy(truth, cost160, reps=2000, seed=6)
        key = (bench.params["m_check"], bench.params["n_check"], bench.params["cutoff"] or "")
        rows = {(r["m_check"], r["n_check"], r["cutoff"]): r["mean_cost"] for r in bench.tuning}
        assert rows[key] <= min(rows.values()) + 1e-9


class TestBenchmarkRollout:
    def test_m_policy_rolls_out(self, truth, cost160, obs):
        bench = build_m_policy(Erlang(2, NU), WEIBULL_F, ZETA, cost160, obs)
        summary = rollout(bench, truth, cost160, reps=2000, seed=7)
        assert 0.0 < summary.mean_cost < 4000.0
        assert 0.0 <= summary.abort_rate <= 1.0

    def test_c_policy_rolls_out(self, truth, cost160):
        summary = rollout(CPolicy(2, 3), truth, cost160, reps=2000, seed=8)
        assert 0.0 < summary.mean_cost < 4000.0
