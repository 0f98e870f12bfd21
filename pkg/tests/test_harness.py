import random
from fractions import Fraction

import pytest

from dagbench.env import Action, Check, EvalFunction, EventLog, run_eval_function
from dagbench.harness import (
    NOISE_TEXT,
    ScriptedAgent,
    SynthesisError,
    TableEvalSynthesizer,
    TableTrajectorySynthesizer,
    cross_verify,
    discriminative_check,
    random_linear_extension,
    replay,
    run_task,
    script_for,
)
from dagbench.model import Subtask, TaskGraph, is_topological_order
from dagbench.synth import random_task

from conftest import diamond


def diamond_task(app_of=None):
    g = diamond(applications=app_of or dict.fromkeys("ABCD", "Excel"), successful_topo=[list("ABCD"), list("ACBD")])
    fns = {n: EvalFunction((Check("check_mouse_clicks", {"text": f"do {n}"}),)) for n in g.nodes}
    return g, fns


def test_script_for_satisfies_every_api():
    fn = EvalFunction(
        (
            Check("check_mouse_clicks", {"text": "OK"}),
            Check("check_keyboard_types", {"text": "hello"}),
            Check("check_file_exists", {"file_path": "C:/a.txt"}),
            Check("check_text_exists_via_ocr", {"text": "Saved"}),
            Check("check_text_exists_via_control", {"text": "Name"}),
            Check("check_text_exists", {"text": "Done"}),
            Check("check_clipboard_equals", {"text": "A1"}),
            Check("check_window_title_contains", {"text": "Book1"}),
            Check("check_control_tree_contains", {"text": "Import"}),
            Check("check_click_count_at_least", {"text": "Next", "count": 2}),
            Check("check_scroll_occurred", {"min_distance": 5}),
        )
    )
    assert run_eval_function(fn, replay(script_for(fn))).success


def test_perfect_agent_succeeds():
    g, fns = diamond_task()
    report = run_task(ScriptedAgent("perfect"), g, fns)
    assert report.sr and report.cr == 1 and report.lc == 1 and report.ams == 1
    assert report.completion_order == ("A", "B", "C", "D")
    report = run_task(ScriptedAgent("perfect", order=("A", "C", "B", "D")), g, fns)
    assert report.completion_order == ("A", "C", "B", "D")


def test_perfect_order_must_be_listed():
    g, fns = diamond_task()
    with pytest.raises(ValueError):
        run_task(ScriptedAgent("perfect", order=("A", "D", "B", "C")), g, fns)


def test_stall_agent_exhausts_budget():
    g, fns = diamond_task()
    report = run_task(ScriptedAgent("stall"), g, fns, max_steps=5)
    assert not report.sr and report.cr == 0 and report.steps_used == 5
    assert report.failure_reason == "step budget exhausted"


def test_missing_binding_fails_before_any_step():
    g, fns = diamond_task()
    del fns["D"]
    with pytest.raises(KeyError):
        run_task(ScriptedAgent("perfect"), g, fns)


def test_shuffled_agent_single_app_lc_is_one():
    for seed in range(10):
        g, fns = diamond_task()
        report = run_task(ScriptedAgent("shuffled", seed=seed), g, fns)
        assert report.sr and report.lc == 1


def test_shuffled_agent_can_lose_coherency():
    apps = {"A": "Excel", "B": "Word", "C": "Excel", "D": "Word"}
    g, fns = diamond_task(apps)
    lcs = {run_task(ScriptedAgent("shuffled", seed=s), g, fns).lc for s in range(20)}
    # best order A,C,B,D scores 2; A,B,C,D scores 0
    assert lcs == {Fraction(0), Fraction(1)}


def test_noisy_zero_equals_perfect():
    rng = random.Random(4)
    for _ in range(30):
        task = random_task(rng)
        a = run_task(ScriptedAgent("perfect"), task.graph, task.functions)
        b = run_task(ScriptedAgent("noisy", p_fail=0.0, seed=rng.randrange(100)), task.graph, task.functions)
        assert a == b


def test_noisy_agent_degrades():
    g, fns = diamond_task()
    agent = ScriptedAgent("noisy", p_fail=1.0, seed=1)
    assert all(a.control_text == NOISE_TEXT for a in agent.plan(g, {n: [Action.click(f"do {n}")] for n in g.nodes}))
    report = run_task(agent, g, fns)
    assert not report.sr and report.cr == 0 and report.ams == 0


def test_agent_validation():
    with pytest.raises(ValueError):
        ScriptedAgent("clairvoyant")
    with pytest.raises(ValueError):
        ScriptedAgent("noisy", p_fail=1.5)


def test_random_linear_extension_is_valid():
    rng = random.Random(2)
    for _ in range(50):
        task = random_task(rng)
        assert is_topological_order(task.graph, random_linear_extension(task.graph, rng))


SUBTASK = Subtask("s1", "Export as '{pdf}'.", "Word", ({"pdf": "out.pdf"},))
GOOD_TRAJ = [Action.click("Export PDF"), Action.type_text("out.pdf", effects={"files": ["out.pdf"]})]


def test_cross_verify_consistent_in_one_iteration():
    fn = EvalFunction((Check("check_mouse_clicks", {"text": "Export PDF"}), Check("check_file_exists", {"file_path": "out.pdf"})))
    out = cross_verify(TableTrajectorySynthesizer({"s1": GOOD_TRAJ}), TableEvalSynthesizer({"s1": fn}), SUBTASK)
    assert out.verified and out.iterations == 1 and out.transcript == ()
    assert run_eval_function(out.function, replay(out.trajectory)).progress == 1


def test_cross_verify_repairs_wrong_check():
    wrong = Check("check_mouse_clicks", {"text": "Export to PDF/XPS"}, "Subtask execution failed because wrong button.")
    fn = EvalFunction((Check("check_mouse_clicks", {"text": "Export PDF"}), wrong))
    out = cross_verify(TableTrajectorySynthesizer({"s1": GOOD_TRAJ}), TableEvalSynthesizer({"s1": fn}), SUBTASK)
    assert out.verified and out.iterations == 2
    assert out.transcript == ("Subtask execution failed because wrong button.",)
    assert len(out.function.checks) == 1


def test_cross_verify_exhausts():
    fn = EvalFunction((Check("check_mouse_clicks", {"text": "Never"}),))
    out = cross_verify(
        TableTrajectorySynthesizer({"s1": GOOD_TRAJ}), TableEvalSynthesizer({"s1": fn}, repair=False), SUBTASK, max_iters=3
    )
    assert out.status == "exhausted" and out.iterations == 3 and len(out.transcript) == 3
    assert out.to_dict()["status"] == "exhausted"


def test_cross_verify_malformed_output_is_distinct():
    good_fn = EvalFunction((Check("check_mouse_clicks", {"text": "Export PDF"}),))
    with pytest.raises(SynthesisError):
        cross_verify(lambda s, f: "click things", TableEvalSynthesizer({"s1": good_fn}), SUBTASK)
    with pytest.raises(SynthesisError):
        cross_verify(TableTrajectorySynthesizer({"s1": GOOD_TRAJ}), lambda s, f: [{"api": "check_magic"}], SUBTASK)
    out = cross_verify(
        TableTrajectorySynthesizer({"s1": GOOD_TRAJ}), lambda s, f: [{"api": "check_mouse_clicks", "args": {"text": "Export PDF"}}], SUBTASK
    )
    assert out.verified
    with pytest.raises(ValueError):
        cross_verify(TableTrajectorySynthesizer({"s1": GOOD_TRAJ}), TableEvalSynthesizer({"s1": good_fn}), SUBTASK, max_iters=0)


def foreign_logs():
    logs = []
    for texts in (["Save"], ["Open", "Print"], ["Share"]):
        log = EventLog(control_text=["Ribbon"])
        for t in texts:
            log.append(Action.click(t))
        log.append(Action.type_text("hello"))
        logs.append(log)
    return logs


def test_discriminative_examples():
    fn = EvalFunction((Check("check_mouse_clicks", {"text": "Export PDF"}),))
    assert discriminative_check(fn, foreign_logs())
    trivial = EvalFunction((Check("check_control_tree_contains", {"text": ""}),))
    assert not discriminative_check(trivial, foreign_logs())
    own = replay(GOOD_TRAJ)
    assert not discriminative_check(fn, foreign_logs() + [own])
    with pytest.raises(ValueError):
        discriminative_check(fn, foreign_logs()[:2])
