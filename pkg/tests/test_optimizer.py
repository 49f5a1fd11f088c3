"""Search driver correctness against exhaustive reference oracles."""

import random

import pytest

from rulesat.dataset import BinDataset
from rulesat.encoder import Scope, lam_to_cost
from rulesat.formula import Formula, check_model
from rulesat.model import Rule, evaluate
from rulesat.optimizer import (
    ContradictionError,
    OptimizerError,
    SearchLimits,
    default_node_budget,
    maxsat_solve,
    minimize_bounded,
    minimize_perfect,
    minimize_sparse,
    oracle_min_size,
)

from conftest import make_ex1, random_dataset
from oracles import brute_min_cost, sequence_min_size, sparse_min_objective

AGG = Scope.aggregated()


# ---------------------------------------------------------------- maxsat


def test_maxsat_fixed_instance():
    f = Formula()
    f.add_hard([1, 2])
    f.add_soft([-1], 3)
    f.add_soft([-2], 2)
    res = maxsat_solve(f)
    assert res.status == "optimal"
    assert res.cost == 2
    # paying the weight-2 soft is forced: var 1 stays false, var 2 true
    assert not res.assignment.value(1)
    assert res.assignment.value(2)


def test_maxsat_differential_random():
    rng = random.Random(2024)
    optima = 0
    for trial in range(150):
        num_vars = rng.randint(3, 10)
        f = Formula(num_vars=num_vars)
        for _ in range(rng.randint(2, 12)):
            width = rng.randint(1, 3)
            lits = [
                rng.choice([-1, 1]) * v
                for v in rng.sample(range(1, num_vars + 1), width)
            ]
            f.add_hard(lits)
        for _ in range(rng.randint(1, 6)):
            width = rng.randint(1, 2)
            lits = [
                rng.choice([-1, 1]) * v
                for v in rng.sample(range(1, num_vars + 1), width)
            ]
            f.add_soft(lits, rng.randint(1, 5))
        if not f.soft:
            continue
        expected = brute_min_cost(num_vars, f.hard, f.soft)
        res = maxsat_solve(f)
        if expected is None:
            assert res.status == "infeasible", trial
            assert res.assignment is None and res.cost is None
            continue
        assert res.status == "optimal", trial
        assert res.cost == expected, trial
        ok, bad = check_model(f, res.assignment)
        assert ok, (trial, bad)
        falsified = sum(
            w for clause, w in f.soft
            if not any(res.assignment.lit_true(l) for l in clause)
        )
        assert falsified == expected, trial
        optima += 1
    assert optima > 50  # the generator must produce plenty of feasible cases


def test_maxsat_rejects_pure_sat_problems():
    f = Formula()
    f.add_hard([1])
    with pytest.raises(OptimizerError, match="at least one soft clause"):
        maxsat_solve(f)


def test_maxsat_infeasible_hard_clauses():
    f = Formula()
    f.add_hard([1])
    f.add_hard([-1])
    f.add_soft([2], 1)
    res = maxsat_solve(f)
    assert res.status == "infeasible"
    assert res.assignment is None and res.cost is None


def test_maxsat_timeout_with_exhausted_budget():
    f = Formula()
    f.add_hard([1, 2])
    f.add_soft([-1], 1)
    res = maxsat_solve(f, SearchLimits(wall_time_budget=1e-9))
    assert res.status == "timeout"
    assert res.assignment is None


# ---------------------------------------------------------------- perfect


def test_minimize_perfect_aggregated_example():
    events = []
    out = minimize_perfect(make_ex1(), AGG, progress=events.append)
    assert out.status == "optimal"
    assert out.objective == 7
    assert out.decision_set.total_size == 7
    assert out.decision_set.metadata == {
        "mode": "perfect", "scope": "aggregated", "objective": 7,
    }
    assert evaluate(out.decision_set, make_ex1()).accuracy == 100.0
    rounds = out.stats["rounds"]
    assert [r["n"] for r in rounds] == list(range(1, 8))
    assert [r["status"] for r in rounds] == ["unsat"] * 6 + ["sat"]
    assert events == rounds


def test_minimize_perfect_per_class_union_matches_aggregated():
    ex1 = make_ex1()
    out1 = minimize_perfect(ex1, Scope.per_class(1))
    out0 = minimize_perfect(ex1, Scope.per_class(0))
    assert out1.objective == 3
    assert out0.objective == 4
    assert all(r.head == 1 for r in out1.decision_set.rules)
    assert all(r.head == 0 for r in out0.decision_set.rules)
    assert out0.objective + out1.objective == 7


def test_minimize_perfect_matches_oracles_on_micro_data():
    rng = random.Random(99)
    for trial in range(40):
        ds = random_dataset(rng, max_m=5, max_k=3)
        scopes = [AGG, Scope.per_class(0), Scope.per_class(1)]
        for scope in scopes:
            expected = oracle_min_size(ds, scope, cap=24)
            assert expected is not None  # consistent data always fits
            out = minimize_perfect(ds, scope)
            assert out.status == "optimal", (trial, scope)
            assert out.objective == expected, (trial, scope, ds)
            if expected <= 5:
                assert sequence_min_size(ds, scope, cap=expected) == expected


def test_minimize_perfect_rejects_contradictions():
    ds = BinDataset(1, ["0", "1"], ["a"], [((1,), 0, 1), ((1,), 1, 1)])
    with pytest.raises(ContradictionError, match="sanitize"):
        minimize_perfect(ds, AGG)
    with pytest.raises(ContradictionError):
        minimize_bounded(ds, AGG, n0=4)


def test_minimize_perfect_immediate_timeout(ex1):
    out = minimize_perfect(ex1, AGG, SearchLimits(wall_time_budget=1e-9))
    assert out.status == "timeout"
    assert out.decision_set is None


def test_minimize_perfect_covers_impossible_target_class():
    # no example of class 0 exists and both values of the only feature
    # occur, so the cheapest rule set covering nothing needs a
    # contradictory two-literal body: three nodes
    ds = BinDataset(1, ["0", "1"], ["a"], [((0,), 1, 1), ((1,), 1, 1)])
    scope = Scope.per_class(0)
    assert oracle_min_size(ds, scope, cap=5) == 3
    out = minimize_perfect(ds, scope)
    assert out.objective == 3
    (rule,) = out.decision_set.rules
    assert rule.head == 0
    assert set(rule.body) == {(0, True), (0, False)}


# ---------------------------------------------------------------- bounded


def test_minimize_bounded_with_roomy_budget(ex1):
    out = minimize_bounded(ex1, AGG, n0=9)
    assert out.status == "optimal"
    assert out.objective == 7
    assert out.decision_set.total_size == 7
    assert out.decision_set.metadata["mode"] == "bounded"
    assert evaluate(out.decision_set, make_ex1()).accuracy == 100.0
    assert [r["n"] for r in out.stats["rounds"]] == [9]


def test_minimize_bounded_grows_past_infeasible_budget(ex1):
    out = minimize_bounded(ex1, AGG, n0=5, step=10)
    assert out.status == "optimal"
    assert out.objective == 7
    rounds = out.stats["rounds"]
    assert [r["n"] for r in rounds] == [5, 15]
    assert rounds[0]["status"] == "infeasible"
    assert rounds[1]["status"] == "optimal"


def test_minimize_bounded_matches_perfect_on_micro_data():
    rng = random.Random(7)
    for trial in range(15):
        ds = random_dataset(rng, max_m=5, max_k=3)
        expected = oracle_min_size(ds, AGG, cap=24)
        out = minimize_bounded(ds, AGG, n0=expected + 2)
        assert out.status == "optimal", trial
        assert out.objective == expected, (trial, ds)


def test_minimize_bounded_budget_above_node_cap(ex1):
    out = minimize_bounded(ex1, AGG, n0=70,
                           limits=SearchLimits(max_nodes=64))
    assert out.status == "timeout"
    assert "node cap" in out.stats["note"]


# ---------------------------------------------------------------- sparse


def test_minimize_sparse_prefers_single_default_rule(ex1):
    out = minimize_sparse(ex1, AGG, lam=0.5)
    assert out.status == "optimal"
    assert out.objective == 7
    assert out.decision_set.rules == [Rule(body=(), head=0)]
    meta = out.decision_set.metadata
    assert meta["lambda_cost"] == 4
    assert meta["misclassified_weight"] == 3
    assert sparse_min_objective(ex1, AGG, 4) == 7


def test_minimize_sparse_gives_up_on_expensive_nodes(ex1):
    out = minimize_sparse(ex1, AGG, lam=1.2)
    assert out.status == "optimal"
    assert out.objective == 8
    assert out.decision_set.rules == []
    assert out.decision_set.metadata["misclassified_weight"] == 8
    assert sparse_min_objective(ex1, AGG, 10) == 8


def test_minimize_sparse_grows_budget_until_certified(ex1):
    out = minimize_sparse(ex1, AGG, lam=0.005, n0=1, step=10)
    assert out.status == "optimal"
    assert out.objective == 4
    rounds = out.stats["rounds"]
    assert [r["n"] for r in rounds] == [1, 11]
    assert rounds[0]["cost"] == 4  # budget-starved round already found it
    assert sparse_min_objective(ex1, AGG, 1) == 4


def test_minimize_sparse_matches_oracle_on_micro_data():
    rng = random.Random(31)
    for trial in range(30):
        ds = random_dataset(rng, max_m=5, max_k=3, weighted=True)
        lam = rng.choice([0.1, 0.25, 0.5, 1.0])
        lam_cost = lam_to_cost(lam, ds.total_weight)
        # a budget beyond total_weight / lam_cost always certifies: any
        # set using that many nodes already costs more than the empty set
        n0 = ds.total_weight // lam_cost + 1
        scopes = [AGG, Scope.per_class(0), Scope.per_class(1)]
        for scope in scopes:
            expected = sparse_min_objective(ds, scope, lam_cost)
            out = minimize_sparse(ds, scope, lam=lam, n0=n0)
            assert out.status == "optimal", (trial, scope)
            assert out.objective == expected, (trial, scope, ds, lam_cost)
            meta = out.decision_set.metadata
            gap = out.objective - meta["misclassified_weight"]
            assert gap == lam_cost * out.decision_set.total_size
            if scope.is_aggregated:
                report = evaluate(out.decision_set, ds)
                assert report.errors == meta["misclassified_weight"]


def test_minimize_sparse_handles_contradictory_data():
    ds = BinDataset(1, ["0", "1"], ["a"],
                    [((1,), 0, 2), ((1,), 1, 1), ((0,), 0, 1)])
    lam_cost = lam_to_cost(1.0, ds.total_weight)
    expected = sparse_min_objective(ds, AGG, lam_cost)
    out = minimize_sparse(ds, AGG, lam=1.0)
    assert out.status == "optimal"
    assert out.objective == expected


def test_minimize_sparse_is_deterministic(ex1):
    first = minimize_sparse(ex1, AGG, lam=0.5)
    second = minimize_sparse(ex1, AGG, lam=0.5)
    assert first.objective == second.objective
    assert first.decision_set.rules == second.decision_set.rules


# ---------------------------------------------------------------- oracle


def test_oracle_min_size_example_values(ex1):
    assert oracle_min_size(ex1, AGG, cap=7) == 7
    assert oracle_min_size(ex1, AGG, cap=6) is None
    assert oracle_min_size(ex1, Scope.per_class(1), cap=8) == 3
    assert oracle_min_size(ex1, Scope.per_class(0), cap=8) == 4


def test_oracle_min_size_single_example():
    ds = BinDataset(1, ["0", "1"], ["a"], [((1,), 1, 1)])
    assert oracle_min_size(ds, AGG, cap=4) == 1
    assert oracle_min_size(ds, Scope.per_class(1), cap=4) == 1


def test_oracle_min_size_guards(ex1):
    with pytest.raises(OptimizerError, match="cap"):
        oracle_min_size(ex1, AGG, cap=0)
    wide = BinDataset(5, ["0", "1"], list("abcde"), [((0, 0, 0, 0, 0), 0, 1)])
    with pytest.raises(OptimizerError, match="limited"):
        oracle_min_size(wide, AGG, cap=4)
    contradictory = BinDataset(1, ["0", "1"], ["a"],
                               [((1,), 0, 1), ((1,), 1, 1)])
    with pytest.raises(ContradictionError):
        oracle_min_size(contradictory, AGG, cap=4)
    empty = BinDataset(1, ["0", "1"], ["a"], [])
    with pytest.raises(OptimizerError, match="at least one example"):
        oracle_min_size(empty, AGG, cap=4)


def test_union_equality_on_micro_data():
    # rules of an aggregated optimum split by head into valid per-class
    # sets and a union of per-class optima is a valid aggregated set, so
    # the optimal sizes add up exactly over the classes present
    rng = random.Random(17)
    checked = 0
    for _ in range(60):
        ds = random_dataset(rng, max_m=6, max_k=3)
        present = sorted({cls for _, cls, _ in ds.examples})
        agg = oracle_min_size(ds, AGG, cap=24)
        per = sum(
            oracle_min_size(ds, Scope.per_class(c), cap=24) for c in present
        )
        assert agg == per, ds
        checked += 1
    assert checked == 60


# ---------------------------------------------------------------- limits


def test_default_node_budget_caps_out():
    assert default_node_budget(4) == 12
    assert default_node_budget(20) == 32


def test_limit_validation(ex1):
    with pytest.raises(OptimizerError, match="positive"):
        SearchLimits(wall_time_budget=0).validate()
    with pytest.raises(OptimizerError, match="max_nodes"):
        SearchLimits(max_nodes=0).validate()
    with pytest.raises(OptimizerError, match="step"):
        minimize_bounded(ex1, AGG, n0=5, step=0)
    with pytest.raises(OptimizerError, match="node budget"):
        minimize_sparse(ex1, AGG, lam=0.5, n0=0)
