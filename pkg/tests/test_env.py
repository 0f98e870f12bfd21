import random

import pytest

from dagbench.env import (
    CHECK_APIS,
    Action,
    ActionError,
    Check,
    EvalFunction,
    EvalResult,
    EventLog,
    MalformedFunctionError,
    check_file_exists,
    check_keyboard_types,
    check_mouse_clicks,
    check_text_exists,
    run_eval_function,
)

OLD = "C:\\Users\\user\\Desktop\\images\\cat.jpg"
NEW = "C:\\Users\\user\\Desktop\\images\\cute cat.jpg"


def test_mouse_click_examples():
    log = EventLog()
    assert not check_mouse_clicks(log, "File Explorer")
    log.append(Action.click("File Explorer"))
    assert check_mouse_clicks(log, "File Explorer")
    log.append(Action.click("Open"))
    assert not check_mouse_clicks(log, "open")


def test_rename_fixture():
    log = EventLog(files=[OLD])
    log.append(Action.type_text("cute cat.jpg{ENTER}", control_text="Name", effects={"files": [NEW]}))
    log.files.discard(OLD)
    assert not check_file_exists(log, OLD)
    assert check_file_exists(log, NEW)


def test_text_exists_on_empty_facts():
    assert not check_text_exists(EventLog(), "anything")
    assert check_text_exists(EventLog(screen_text=["Saved"]), "Saved")
    assert check_text_exists(EventLog(control_text=["Saved"]), "Saved")


def test_keyboard_types_uses_concatenated_stream():
    log = EventLog()
    log.append(Action.type_text("Hello, "))
    log.append(Action.type_text("World!"))
    assert check_keyboard_types(log, "Hello")
    assert check_keyboard_types(log, "o, Wo")
    assert not check_keyboard_types(log, "world")


def test_keyboard_substring_oracle():
    rng = random.Random(3)
    alphabet = "ab c"
    for _ in range(200):
        chunks = ["".join(rng.choice(alphabet) for _ in range(rng.randint(1, 4))) for _ in range(rng.randint(1, 4))]
        log = EventLog()
        for c in chunks:
            log.append(Action.type_text(c))
        query = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 3)))
        assert check_keyboard_types(log, query) == (query in "".join(chunks))


def test_invented_apis():
    log = EventLog()
    log.append(Action.click("Copy", effects={"clipboard": "A1:B9", "window_title": "Book1 - Excel"}))
    log.append(Action.click("Copy"))
    log.append(Action.scroll(dy=-3))
    assert Check("check_clipboard_equals", {"text": "A1:B9"}).run(log)
    assert Check("check_window_title_contains", {"text": "Excel"}).run(log)
    assert Check("check_click_count_at_least", {"text": "Copy", "count": 2}).run(log)
    assert not Check("check_click_count_at_least", {"text": "Copy", "count": 3}).run(log)
    assert Check("check_scroll_occurred", {"min_distance": 3}).run(log)
    assert not Check("check_scroll_occurred", {"min_distance": 4}).run(log)
    log.append(Action.click("Menu", effects={"control_text": ["Import tasks from a spreadsheet"]}))
    assert Check("check_control_tree_contains", {"text": "spreadsheet"}).run(log)
    assert len(CHECK_APIS) == 11


def test_action_validation():
    with pytest.raises(ActionError):
        Action("drag", {})
    with pytest.raises(ActionError):
        Action("keyboard_input", {})
    with pytest.raises(ActionError):
        Action("click_input", {"button": "left"})
    with pytest.raises(ActionError):
        Action("wheel_mouse_input", {})
    with pytest.raises(ActionError):
        Action.click("x", effects={"smell": ["burnt"]})


def test_action_tokens():
    assert Action.click("OK").token() == ("click_input", "left", "OK")
    assert Action.type_text("hi", control_text="Name").token() == ("keyboard_input", "hi", "Name")


def test_check_validation_and_default_message():
    with pytest.raises(MalformedFunctionError):
        Check("check_teleport", {})
    with pytest.raises(MalformedFunctionError):
        Check("check_mouse_clicks", {})
    with pytest.raises(MalformedFunctionError):
        Check("check_mouse_clicks", {"text": "a", "bogus": 1})
    with pytest.raises(MalformedFunctionError):
        EvalFunction(())
    msg = Check("check_mouse_clicks", {"text": "Export"}).message
    assert msg.startswith("Subtask execution failed because")


def test_eval_examples():
    fn = EvalFunction(
        (
            Check("check_mouse_clicks", {"text": "a"}),
            Check("check_mouse_clicks", {"text": "b"}),
            Check("check_mouse_clicks", {"text": "c"}),
            Check("check_mouse_clicks", {"text": "d"}),
        )
    )
    log = EventLog()
    for t in "abd":
        log.append(Action.click(t))
    r = run_eval_function(fn, log)
    assert (r.success, r.progress_label) == (False, "2/4")
    assert r.message == fn.checks[2].message
    log.append(Action.click("c"))
    r = run_eval_function(fn, log)
    assert r.success and r.progress == 1 and r.progress_label == "4/4"
    one = EvalFunction((Check("check_file_exists", {"file_path": "x"}),))
    assert run_eval_function(one, EventLog()).progress_label == "0/1"


def test_eval_result_invariants():
    with pytest.raises(ValueError):
        EvalResult(True, "", 1, 2)
    with pytest.raises(ValueError):
        EvalResult(False, "", 3, 2)


def test_progress_is_monotone_for_monotone_checks():
    rng = random.Random(5)
    apis = ["check_mouse_clicks", "check_keyboard_types", "check_text_exists_via_control"]
    for _ in range(100):
        words = ["w1", "w2", "w3", "w4"]
        fn = EvalFunction(tuple(Check(rng.choice(apis), {"text": w}) for w in rng.sample(words, 3)))
        log = EventLog()
        last = run_eval_function(fn, log).progress
        for _ in range(10):
            w = rng.choice(words)
            kind = rng.randrange(3)
            if kind == 0:
                log.append(Action.click(w))
            elif kind == 1:
                log.append(Action.type_text(w))
            else:
                log.append(Action.scroll(effects={"control_text": [w]}))
            now = run_eval_function(fn, log).progress
            assert now >= last
            last = now


def test_fork_is_independent():
    log = EventLog(files=["a"])
    log.append(Action.click("x"))
    other = log.fork()
    other.append(Action.click("y", effects={"files": ["b"]}))
    assert len(log) == 1 and log.files == {"a"}
    assert len(other) == 2 and other.files == {"a", "b"}
