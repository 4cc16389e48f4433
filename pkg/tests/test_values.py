import math

import numpy as np
import pytest

from missionabort.distributions import Exponential
from missionabort.surrogate import build_surrogate
from missionabort.values import (
    CostModel,
    abort_cost_vector,
    find_hat_n,
    find_tilde_n,
    multi_no_abort,
    multi_no_abort_after,
    never_abort,
    no_intermediate_check,
    upper_continue_vector,
    v_ab,
    v_c_upper,
    vertex_value_recursion,
)
from tests.conftest import ramp_rescue


def e_last(m):
    v = np.zeros(m)
    v[-1] = 1.0
    return v


def mlr_pair(rng, m):
    lo = rng.dirichlet(np.ones(m)) + 1e-6
    lo = lo / lo.sum()
    hi = lo * np.cumprod(rng.uniform(1.0, 2.0, size=m))
    return lo, hi / hi.sum()


class TestCostModel:
    def test_rejects_decreasing_single_task_schedule(self):
        w = ramp_rescue(10)
        w[5] = 0.5
        with pytest.raises(ValueError):
            CostModel(cs=1.0, cm=1.0, delta=1.0, n_periods=10, w=w)

    def test_rejects_nonzero_w0(self):
        w = ramp_rescue(10)
        w[0] = 1.0
        with pytest.raises(ValueError):
            CostModel(cs=1.0, cm=1.0, delta=1.0, n_periods=10, w=w)

    def test_multi_task_waives_monotonicity(self):
        w = np.array([0.0, 2.0, 1.0, 3.0, 1.0, 2.0])
        cost = CostModel(
            cs=1.0, cm=(3.0, 2.0), delta=1.0, n_periods=5, w=w, cr=1.0, task_lengths=(2, 3)
        )
        assert cost.multi_task
        assert cost.active_cm(0) == 5.0
        assert cost.active_cm(2) == 2.0
        assert cost.active_cm(4) == 2.0

    def test_task_lengths_must_sum(self):
        with pytest.raises(ValueError):
            CostModel(
                cs=1.0, cm=(1.0, 1.0), delta=1.0, n_periods=5,
                w=np.zeros(6), task_lengths=(2, 2),
            )


class TestAbortCost:
    def test_period_zero_is_pure_mission_loss(self, weibull_model, single_cost):
        rng = np.random.default_rng(0)
        pi = rng.dirichlet(np.ones(weibull_model.n_transient))
        assert v_ab(0, pi, weibull_model, single_cost) == pytest.approx(2000.0, rel=1e-12)

    def test_worst_state_closed_form(self, weibull_model, single_cost):
        lam = weibull_model.lam
        expected = 2000.0 + 2000.0 * (1.0 - math.exp(-lam * 25.0))
        got = v_ab(30, e_last(weibull_model.n_transient), weibull_model, single_cost)
        assert got == pytest.approx(expected, rel=1e-9)

    def test_linearity(self, weibull_model, single_cost):
        rng = np.random.default_rng(1)
        m = weibull_model.n_transient
        for n in (0, 10, 80, 160):
            p1, p2 = rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(m))
            a = rng.uniform()
            lhs = v_ab(n, a * p1 + (1 - a) * p2, weibull_model, single_cost)
            rhs = a * v_ab(n, p1, weibull_model, single_cost) + (1 - a) * v_ab(n, p2, weibull_model, single_cost)
            assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_mlr_monotone_in_belief_and_period(self, weibull_model, single_cost):
        rng = np.random.default_rng(2)
        m = weibull_model.n_transient
        for _ in range(50):
            lo, hi = mlr_pair(rng, m)
            assert v_ab(40, lo, weibull_model, single_cost) <= v_ab(40, hi, weibull_model, single_cost) + 1e-9
        pi = rng.dirichlet(np.ones(m))
        vals = [v_ab(n, pi, weibull_model, single_cost) for n in range(0, 161, 10)]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


class TestUpperContinue:
    def test_terminal_matches_stop_cost(self, weibull_model, single_cost):
        rng = np.random.default_rng(3)
        pi = rng.dirichlet(np.ones(weibull_model.n_transient))
        kern = weibull_model.kernel(25.0)
        expected = 4000.0 * float(pi @ kern.p_fail)
        assert v_c_upper(160, pi, weibull_model, single_cost) == pytest.approx(expected, rel=1e-12)

    def test_worst_state_closed_form(self, weibull_model, single_cost):
        expected = 4000.0 * (1.0 - math.exp(-weibull_model.lam * 26.0))
        got = v_c_upper(159, e_last(weibull_model.n_transient), weibull_model, single_cost)
        assert got == pytest.approx(expected, rel=1e-9)

    def test_nonincreasing_in_period(self, weibull_model, single_cost):
        rng = np.random.default_rng(4)
        pi = rng.dirichlet(np.ones(weibull_model.n_transient))
        vals = [v_c_upper(n, pi, weibull_model, single_cost) for n in range(0, 161, 8)]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


class TestNeverAbort:
    def test_ratio_dominates(self):
        cost = CostModel(cs=500.0, cm=2000.0, delta=1.0, n_periods=160, w=np.zeros(161))
        assert math.expm1(0.01 * 160.0) == pytest.approx(3.953, abs=1e-3)
        assert never_abort(cost, lam=0.01)

    def test_case_study_is_not_never_abort(self, single_cost):
        assert not never_abort(single_cost, lam=0.134)

    def test_vanishing_system_cost(self):
        cost = CostModel(cs=0.0, cm=10.0, delta=1.0, n_periods=5, w=np.zeros(6))
        assert never_abort(cost, lam=100.0)


class TestHatN:
    def test_matches_linear_scan(self, weibull_model, single_cost):
        n_hat = find_hat_n(weibull_model, single_cost)

        def ok(n):
            gap = upper_continue_vector(weibull_model, single_cost, n) - abort_cost_vector(
                weibull_model, single_cost, n
            )
            return gap.max() <= 0.0

        brute = next(n for n in range(161) if ok(n))
        assert n_hat == brute
        assert 0 < n_hat < 160

    def test_boundary_zero(self):
        model = build_surrogate(Exponential(1e-4), Exponential(1e-4), 0.0, 1, 1, lam=1e-4)
        cost = CostModel(cs=2000.0, cm=2000.0, delta=1.0, n_periods=10, w=np.zeros(11))
        assert find_hat_n(model, cost) == 0

    def test_continue_dominates_after_threshold(self, weibull_model, single_cost):
        n_hat = find_hat_n(weibull_model, single_cost)
        rng = np.random.default_rng(5)
        m = weibull_model.n_transient
        for _ in range(200):
            n = int(rng.integers(n_hat, 161))
            pi = rng.dirichlet(np.ones(m))
            assert v_c_upper(n, pi, weibull_model, single_cost) <= v_ab(n, pi, weibull_model, single_cost) + 1e-9


class TestTildeN:
    def test_strict_dominance_up_to_threshold(self, weibull_model, single_cost):
        tilde = find_tilde_n(weibull_model, single_cost)
        assert tilde is not None
        vab, vc = vertex_value_recursion(weibull_model, single_cost)
        assert np.all(vc[: tilde + 1] > vab[: tilde + 1])
        assert np.all(vc[tilde + 1 :] <= vab[tilde + 1 :])

    def test_threshold_order(self, weibull_model, single_cost):
        tilde = find_tilde_n(weibull_model, single_cost)
        n_hat = find_hat_n(weibull_model, single_cost)
        assert 0 <= tilde < n_hat <= 160

    def test_zero_rescue_schedule_removes_middle_stage(self, weibull_model):
        cost = CostModel(cs=2000.0, cm=2000.0, delta=1.0, n_periods=160, w=np.zeros(161))
        tilde = find_tilde_n(weibull_model, cost)
        n_hat = find_hat_n(weibull_model, cost)
        assert tilde is not None
        assert tilde >= n_hat - 1

    def test_free_abort_dominates_at_vertex(self, weibull_model):
        # With no mission loss and instant rescue, aborting at the worst state
        # is strictly better at every period.
        cost = CostModel(cs=2000.0, cm=0.0, delta=1.0, n_periods=160, w=np.zeros(161))
        vab, vc = vertex_value_recursion(weibull_model, cost)
        assert np.all(vab == 0.0)
        assert np.all(vc > 0.0)
        assert find_tilde_n(weibull_model, cost) == 159


class TestNoIntermediate:
    def test_zero_rescue_schedule(self, weibull_model):
        cost = CostModel(cs=2000.0, cm=2000.0, delta=1.0, n_periods=160, w=np.zeros(161))
        assert no_intermediate_check(weibull_model, cost, find_hat_n(weibull_model, cost))

    def test_case_study_report(self, weibull_model, single_cost):
        n_hat = find_hat_n(weibull_model, single_cost)
        result = no_intermediate_check(weibull_model, single_cost, n_hat)
        assert isinstance(result, bool)


class TestMultiTask:
    @staticmethod
    def multi_cost():
        n = 135
        return CostModel(
            cs=2000.0,
            cm=(500.0, 300.0, 200.0),
            delta=1.0,
            n_periods=n,
            w=ramp_rescue(n),
            cr=1000.0,
            task_lengths=(35, 50, 50),
        )

    def test_single_mission_reduces_to_never_abort(self):
        n = 20
        lam = 0.05
        multi = CostModel(
            cs=100.0, cm=(5000.0,), delta=1.0, n_periods=n, w=ramp_rescue(n), cr=0.0, task_lengths=(n,)
        )
        single = CostModel(cs=100.0, cm=5000.0, delta=1.0, n_periods=n, w=ramp_rescue(n))
        assert multi_no_abort(multi, lam) == never_abort(single, lam)
        lam2 = 0.005
        assert multi_no_abort(multi, lam2) == never_abort(single, lam2)

    def test_case_study_instance_can_abort(self):
        assert not multi_no_abort(self.multi_cost(), lam=0.209)

    def test_huge_terminal_mission_cost(self):
        cost = CostModel(
            cs=2000.0,
            cm=(500.0, 300.0, 1e25),
            delta=1.0,
            n_periods=135,
            w=ramp_rescue(135),
            cr=1000.0,
            task_lengths=(35, 50, 50),
        )
        assert multi_no_abort(cost, lam=0.209)

    def test_no_abort_after_l_consistency(self, mixture_model):
        cost = self.multi_cost()
        lam = mixture_model.lam
        assert multi_no_abort_after(0, mixture_model, cost, lam) == multi_no_abort(cost, lam)
        for l in (1, 2):
            assert isinstance(multi_no_abort_after(l, mixture_model, cost, lam), bool)
