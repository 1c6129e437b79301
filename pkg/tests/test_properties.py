import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import task_oracle
from reference import brute_diminishing_margin, brute_monotone_margin, brute_sigma
from strsub.adaptive_measurement import MeasurementInstance, MeasurementOracle, uniform_grid
from strsub.core import FunctionOracle, TableOracle, ValueTable
from strsub.optimize import exhaustive_optimal, greedy
from strsub.properties import (
    check_go_concavity,
    check_k_diminishing,
    check_k_monotone,
    check_k_submodular,
    check_postfix_restricted,
    compute_eta,
    compute_sigma_restricted,
    factor_curved,
    factor_thm3,
)
from strsub.task_assignment import TaskAssignmentOracle, ta_random_instance


def go_violating_table():
    # greedy takes (0) then (0,0); the optimum (1,1) is only reachable from (1)
    values = {(0,): 1.0, (1,): 0.9, (0, 0): 1.0, (0, 1): 1.0, (1, 0): 1.0, (1, 1): 2.0}
    return TableOracle(values, 2, 2)


class TestMonotone:
    def test_task_model_holds(self):
        rep = check_k_monotone(task_oracle([0.2, 0.7, 0.9], 3), 3)
        assert rep.holds and rep.worst_margin > 0 and rep.counterexample is None

    def test_negative_length_fails(self):
        f = FunctionOracle(lambda s: -float(len(s)), 1, 2)
        rep = check_k_monotone(f, 2)
        assert not rep.holds
        assert rep.worst_margin == -2.0
        assert rep.counterexample == ((), (0, 0))
        assert rep.num_checked == 3

    def test_measurement_holds(self):
        inst = MeasurementInstance((0.7, 3.0, 0.4), uniform_grid(3))
        assert check_k_monotone(MeasurementOracle(inst), 3).holds

    def test_postfix_restricted(self):
        rep = check_postfix_restricted(task_oracle([0.3, 0.6], 3), 3)
        assert rep.holds
        f = FunctionOracle(lambda s: 1.0 if s and s[0] == 0 else 0.0, 2, 2)
        rep = check_postfix_restricted(f, 2)
        assert not rep.holds
        M, N = rep.counterexample
        assert f.evaluate(M + N) - f.evaluate(N) == rep.worst_margin == -1.0


class TestDiminishing:
    def test_diminishing_condition_instance(self):
        inst = ta_random_instance(0, 1, 2, 3, 0.6, 0.9)
        rep = check_k_diminishing(TaskAssignmentOracle(inst), 3)
        assert rep.holds

    def test_square_fails(self):
        f = FunctionOracle(lambda s: float(len(s)) ** 2, 1, 3)
        rep = check_k_diminishing(f, 3)
        assert not rep.holds
        M, N, a = rep.counterexample
        lhs = f.evaluate(M + (a,)) - f.evaluate(M)
        rhs = f.evaluate(N + (a,)) - f.evaluate(N)
        assert lhs - rhs == rep.worst_margin < 0
        sub = check_k_submodular(f, 3)
        assert not sub.holds and check_k_monotone(f, 3).holds

    def test_single_action_margin(self):
        p, K = 0.3, 4
        rep = check_k_diminishing(task_oracle([p], K), K)
        assert rep.holds
        # gains p(1-p)^k; the tightest pair is |M|=K-2, |N|=K-1
        assert rep.worst_margin == pytest.approx(p * (1 - p) ** (K - 2) * p, rel=1e-12)

    def test_decreasing_variance_counterexample(self):
        inst = MeasurementInstance((4.0, 0.25), (0.5, 1.0))
        o = MeasurementOracle(inst)
        rep = check_k_diminishing(o, 2)
        assert not rep.holds
        M, N, a = rep.counterexample
        assert (o.evaluate(M + (a,)) - o.evaluate(M)) - (o.evaluate(N + (a,)) - o.evaluate(N)) == pytest.approx(
            rep.worst_margin, abs=1e-15
        )

    def test_k1_vacuous(self):
        rep = check_k_diminishing(task_oracle([0.5], 1), 1)
        assert rep.holds and rep.num_checked == 0 and rep.worst_margin == math.inf


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(1, 3), st.integers(1, 4))
def test_checkers_match_brute_force(seed, n, m, K):
    inst = ta_random_instance(seed, n, m, K, 0.01, 0.99)
    o = TaskAssignmentOracle(inst)
    tab = ValueTable.build(o, K)
    f = o.evaluate
    assert check_k_monotone(o, K, table=tab).worst_margin == pytest.approx(brute_monotone_margin(f, m, K), abs=1e-15)
    dim = check_k_diminishing(o, K, table=tab)
    assert dim.worst_margin == pytest.approx(brute_diminishing_margin(f, m, K), abs=1e-15)
    if K >= 2:
        sig = compute_sigma_restricted(o, K, table=tab)
        assert sig.value == pytest.approx(brute_sigma(f, m, K), abs=1e-12)


def test_threads_do_not_change_reports():
    inst = ta_random_instance(9, 2, 4, 4, 0.01, 0.99)
    o = TaskAssignmentOracle(inst)
    a = check_k_diminishing(o, 4, threads=1)
    b = check_k_diminishing(o, 4, threads=8)
    assert a == b


class TestGOConcavity:
    def test_identical_actions(self, identical_oracle):
        tr, opt = greedy(identical_oracle, 2), exhaustive_optimal(identical_oracle, 2)
        rep = check_go_concavity(identical_oracle, 2, tr, opt)
        assert rep.holds

    def test_two_agents_margin(self, two_agent_oracle):
        tr, opt = greedy(two_agent_oracle, 2), exhaustive_optimal(two_agent_oracle, 2)
        rep = check_go_concavity(two_agent_oracle, 2, tr, opt)
        assert rep.holds
        assert rep.worst_margin == pytest.approx(0.91 - (0.5 * 0.7 + 0.5 * 0.91), abs=1e-12)

    def test_planted_violation(self):
        t = go_violating_table()
        tr, opt = greedy(t, 2), exhaustive_optimal(t, 2)
        assert tr.string == (0, 0) and opt.argmax == (1, 1)
        rep = check_go_concavity(t, 2, tr, opt)
        assert not rep.holds
        G, tail, O = rep.counterexample
        assert (G, tail, O) == ((0,), (1,), (1, 1))
        i, K = len(G), len(O)
        assert t.evaluate(G + tail) - ((i / K) * t.evaluate(G) + (1 - i / K) * t.evaluate(O)) == rep.worst_margin == -0.5

    def test_short_optimum_not_applicable(self):
        t = TableOracle({(0,): 2.0, (1,): 1.0, (0, 0): 1.5, (0, 1): 0.0, (1, 0): 0.0, (1, 1): 1.9}, 2, 2)
        rep = check_go_concavity(t, 2, greedy(t, 2), exhaustive_optimal(t, 2))
        assert not rep.applicable and not rep.holds
        assert not compute_eta(t, 2, greedy(t, 2), exhaustive_optimal(t, 2)).applicable


class TestEta:
    def test_identical_actions(self, identical_oracle):
        est = compute_eta(identical_oracle, 2, greedy(identical_oracle, 2), exhaustive_optimal(identical_oracle, 2))
        # [2*0.5 - (2*0.75 - 0.75)] / 0.5
        assert est.value == pytest.approx(0.5, abs=1e-12)
        assert est.maximizer == 1

    def test_k1(self):
        o = task_oracle([0.5], 1)
        est = compute_eta(o, 1, greedy(o, 1), exhaustive_optimal(o, 1))
        assert not est.applicable and "empty" in est.reason_if_not

    def test_zero_greedy_value(self):
        f = FunctionOracle(lambda s: float(len(s) >= 2), 1, 2)
        est = compute_eta(f, 2, greedy(f, 2), exhaustive_optimal(f, 2))
        assert not est.applicable

    def test_bounded_by_one_under_go_concavity(self):
        for seed in range(40):
            o = TaskAssignmentOracle(ta_random_instance(seed, 3, 3, 4, 0.5, 0.95))
            tr, opt = greedy(o, 4), exhaustive_optimal(o, 4)
            assert check_go_concavity(o, 4, tr, opt).holds
            assert compute_eta(o, 4, tr, opt).value <= 1.0 + 1e-12


class TestSigma:
    def test_identical_actions(self, identical_oracle):
        est = compute_sigma_restricted(identical_oracle, 2)
        assert est.value == pytest.approx(0.5, abs=1e-12)

    def test_modular_is_zero(self):
        w = [0.3, 1.2, 0.7]
        f = FunctionOracle(lambda s: float(sum(w[a] for a in s)), 3, 3)
        assert compute_sigma_restricted(f, 3).value == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("seed", range(20))
    def test_unit_interval_stage_independent(self, seed):
        probs = np.random.default_rng(seed).uniform(0.5, 0.9, size=2)
        est = compute_sigma_restricted(task_oracle(probs, 3), 3)
        assert 0.0 <= est.value <= 1.0

    def test_stage_dependent_can_exceed_one(self):
        # f((a) + M) < f(M) is possible once probabilities vary by stage
        o = TaskAssignmentOracle(ta_random_instance(0, 1, 2, 2, 0.01, 0.99))
        est = compute_sigma_restricted(o, 2)
        assert est.value > 1.0
        assert not check_postfix_restricted(o, 2).holds

    def test_no_positive_action(self):
        est = compute_sigma_restricted(FunctionOracle(lambda s: -1.0, 2, 2), 2)
        assert not est.applicable and est.skipped == 2

    def test_skips_nonpositive_actions(self):
        f = FunctionOracle(lambda s: float(sum(1 if a == 0 else -1 for a in s)), 2, 2)
        est = compute_sigma_restricted(f, 2)
        assert est.applicable and est.skipped == 1 and est.maximizer[0] == 0


class TestFactors:
    @pytest.mark.parametrize("K, want", [(1, 1.0), (2, 0.75), (5, 1 - 0.8**5)])
    def test_uncurved_factor(self, K, want):
        assert factor_thm3(K) == pytest.approx(want, abs=1e-15)

    def test_uncurved_factor_limit(self):
        vals = [factor_thm3(K) for K in range(1, 200)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert all(v > 1 - math.exp(-1) for v in vals)

    def test_curved(self):
        assert factor_curved(0.5, 2) == pytest.approx(0.875, abs=1e-15)
        for K in (1, 2, 7, 100):
            assert factor_curved(1.0, K) == factor_thm3(K)
        assert factor_curved(1e-9, 10) == pytest.approx(1.0, abs=1e-7)

    @pytest.mark.parametrize("c", [0.0, -0.1, 1.0001])
    def test_curved_range(self, c):
        with pytest.raises(ValueError):
            factor_curved(c, 3)

    @given(st.integers(2, 50))
    def test_curved_decreasing_in_c(self, K):
        cs = np.linspace(0.01, 1.0, 100)
        vals = [factor_curved(c, K) for c in cs]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    @given(st.floats(1e-3, 1.0, exclude_max=True), st.integers(1, 500))
    def test_curved_chain(self, c, K):
        asymptotic = (1 - math.exp(-c)) / c
        assert factor_curved(c, K) > asymptotic > 1 - math.exp(-1)
