import itertools
import math
import random
from fractions import Fraction

import pytest

from dagbench.env import Action, Check, EvalFunction
from dagbench.evaluator import (
    BUDGET_EXHAUSTED,
    BatchRow,
    EvaluationRun,
    MetricsReport,
    NodeState,
    RunTerminatedError,
    action_match_score,
    coherency_score,
    coverage_rate,
    edit_distance,
    logical_consistency,
    max_coherency,
    max_coherency_bruteforce,
    sensitivity,
    step,
)
from dagbench.model import GraphError, TaskGraph, is_topological_order

from conftest import chain, diamond


def click_fn(node):
    return EvalFunction((Check("check_mouse_clicks", {"text": f"do {node}"}),))


def diamond_run(max_steps=15):
    g = diamond(applications=dict.fromkeys("ABCD", "Excel"))
    return EvaluationRun(g, {n: click_fn(n) for n in g.nodes}, max_steps)


def test_fresh_diamond_states():
    run = diamond_run()
    assert run.evaluating == ["A"]
    assert {n for n, s in run.states.items() if s is NodeState.WAITING} == {"B", "C", "D"}


def test_completing_root_unlocks_both_branches():
    run = diamond_run()
    assert run.step(Action.click("do A")) == ["A"]
    assert run.states["A"] is NodeState.COMPLETED
    assert run.evaluating == ["B", "C"]


def test_node_cannot_complete_before_it_evaluates():
    run = diamond_run()
    run.step(Action.click("do B"))
    assert run.completed == set()
    run.step(Action.click("do A"))
    # B's click is already in the log, so B passes on the next action.
    assert run.completion_order == ["A"]
    assert run.step(Action.click("noop")) == ["B"]


def test_simultaneous_completions_in_id_order():
    g = TaskGraph(("Z", "M", "A"))
    fn = EvalFunction((Check("check_mouse_clicks", {"text": "go"}),))
    run = EvaluationRun(g, dict.fromkeys(g.nodes, fn))
    assert run.step(Action.click("go")) == ["A", "M", "Z"]
    assert run.succeeded and run.terminated


def test_budget_exhaustion():
    run = diamond_run(max_steps=3)
    for _ in range(3):
        run.step(Action.click("nothing"))
    assert run.terminated and not run.succeeded
    assert run.failure_reason == BUDGET_EXHAUSTED == "step budget exhausted"
    with pytest.raises(RunTerminatedError):
        run.step(Action.click("do A"))
    report = run.report()
    assert report.cr == 0 and report.steps_used == 3


def test_budget_counter_resets_on_completion():
    run = diamond_run(max_steps=2)
    run.step(Action.click("x"))
    run.step(Action.click("do A"))
    run.step(Action.click("x"))
    assert not run.terminated
    run.step(Action.click("x"))
    assert run.terminated


def test_report_needs_applications():
    g = diamond()
    run = EvaluationRun(g, {n: click_fn(n) for n in g.nodes})
    with pytest.raises(KeyError, match="no application"):
        run.report()


def test_missing_binding_and_bad_budget():
    g = diamond()
    with pytest.raises(KeyError):
        EvaluationRun(g, {"A": click_fn("A")})
    with pytest.raises(ValueError):
        EvaluationRun(g, {n: click_fn(n) for n in g.nodes}, max_steps=0)


def test_functional_step_checks_log_identity():
    run = diamond_run()
    assert step(run, Action.click("do A"), run.log) is run
    from dagbench.env import EventLog

    with pytest.raises(ValueError):
        step(run, Action.click("x"), EventLog())


def test_coverage_examples():
    g = diamond()
    assert coverage_rate(g, g.nodes) == 1
    assert coverage_rate(chain(2), {"c0"}) == Fraction(1, 3)
    assert coverage_rate(g, {"A", "B"}) == Fraction(3, 8)
    assert coverage_rate(g, set()) == 0
    with pytest.raises(GraphError):
        coverage_rate(g, {"Q"})


def test_coherency_examples():
    apps = {"x1": "X", "x2": "X", "y1": "Y"}
    assert coherency_score(["x1", "x2"], apps) == 1
    assert coherency_score([], apps) == 0
    assert coherency_score(["x1"], apps) == 0
    assert coherency_score(["x1", "y1", "x2"], apps) == 0


def test_max_coherency_examples():
    apps = {"x1": "X", "x2": "X", "y1": "Y"}
    free = TaskGraph(("x1", "x2", "y1"))
    assert max_coherency(free, apps) == 1
    assert max(coherency_score(p, apps) for p in itertools.permutations(free.nodes)) == 1
    c = chain(2)
    assert max_coherency(c, {"c0": "X", "c1": "X"}) == 1
    g = diamond()
    assert max_coherency(g, dict.fromkeys(g.nodes, "Excel")) == 3


def test_logical_consistency_examples():
    apps = {"x1": "X", "x2": "X", "y1": "Y"}
    free = TaskGraph(("x1", "x2", "y1"))
    assert logical_consistency(free, ["x1", "y1", "x2"], apps) == 0
    assert logical_consistency(free, ["x1", "x2", "y1"], apps) == 1
    g = diamond()
    assert logical_consistency(g, ["A", "C", "B", "D"], dict.fromkeys(g.nodes, "Word")) == 1
    distinct = {"A": "Word", "B": "Excel", "C": "Spotify", "D": "Paint"}
    assert logical_consistency(g, ["A", "B"], distinct) == 1


def test_logical_consistency_rejects_bad_sequences():
    g = diamond()
    apps = dict.fromkeys(g.nodes, "Word")
    with pytest.raises(GraphError):
        logical_consistency(g, ["B", "A"], apps)
    with pytest.raises(GraphError):
        logical_consistency(g, ["A", "A"], apps)


def test_max_coherency_dp_matches_bruteforce_small():
    rng = random.Random(21)
    from dagbench.synth import random_dag

    for _ in range(150):
        g = random_dag(rng, rng.randint(1, 6), rng.random())
        apps = {n: rng.choice("XYZ") for n in g.nodes}
        brute = max(
            coherency_score(p, apps) for p in itertools.permutations(g.nodes) if is_topological_order(g, p)
        )
        assert max_coherency(g, apps) == brute == max_coherency_bruteforce(g, apps)


def test_edit_distance():
    assert edit_distance("kitten", "sitting") == 3
    assert edit_distance([], [1, 2]) == 2


def test_action_match_examples():
    ref = [Action.click("a"), Action.click("b"), Action.type_text("c"), Action.click("d")]
    assert action_match_score(ref, ref) == 1
    assert action_match_score([], ref) == 0
    assert action_match_score(None, ref) == 0
    sub = list(ref)
    sub[1] = Action.click("wrong")
    assert action_match_score(sub, ref) == Fraction(3, 4)
    assert action_match_score([], []) == 1


def test_sensitivity_examples():
    assert sensitivity([30, 30, 30]) == 0
    assert sensitivity([42]) == 0
    assert abs(sensitivity([20, 30, 40]) - 8.1650) <= 1e-4
    assert math.isclose(sensitivity([20, 30, 40]), math.sqrt(200 / 3))
    assert math.isclose(sensitivity([20, 30, 40], population=False), 10.0)
    with pytest.raises(ValueError):
        sensitivity([])


def test_report_serialization_and_invariant():
    report = MetricsReport(Fraction(3, 8), Fraction(1), False, Fraction(3, 4), 7, ("A", "B"), "step budget exhausted")
    d = report.to_dict()
    assert d["cr"] == 0.375 and d["cr_exact"] == "3/8"
    assert d["completion_order"] == ["A", "B"]
    with pytest.raises(ValueError):
        MetricsReport(Fraction(1, 2), Fraction(1), True, Fraction(1), 3)


def test_batch_row_csv():
    report = MetricsReport(Fraction(1), Fraction(1), True, Fraction(1), 4)
    row = BatchRow("t1", ["long-range-planning"], report)
    assert BatchRow.CSV_COLUMNS == ("task_id", "capabilities", "cr", "lc", "sr", "ams", "steps")
    assert row.as_csv_row() == ["t1", "long-range-planning", "1.000000", "1.000000", "1", "1.000000", "4"]
