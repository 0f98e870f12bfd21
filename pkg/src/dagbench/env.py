"""Simulated desktop environment: action log, check APIs and partial-credit evaluation.

Stands in for a real VM. Actions are recorded in an append-only log; facts the
checks query (files, on-screen text, control text, clipboard, window titles)
change only through action ``effects`` or fixture setup.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

ACTION_KINDS = ("click_input", "wheel_mouse_input", "keyboard_input")
EFFECT_KEYS = ("files", "screen_text", "control_text", "clipboard", "window_title")


class ActionError(ValueError):
    pass


class MalformedFunctionError(ValueError):
    """An evaluation function that cannot be run (unknown API, bad args)."""


@dataclass(frozen=True)
class Action:
    kind: str
    args: Mapping[str, Any] = field(default_factory=dict)
    rect: tuple[int, int, int, int] | None = None
    control_text: str | None = None
    description: str | None = None
    thought: str | None = None
    effects: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in ACTION_KINDS:
            raise ActionError(f"unknown action kind {self.kind!r}")
        args = dict(self.args)
        if self.kind == "click_input":
            missing = [k for k in ("button", "double") if k not in args]
            if missing:
                raise ActionError(f"click_input requires {', '.join(missing)}")
        elif self.kind == "keyboard_input":
            if not isinstance(args.get("text"), str):
                raise ActionError("keyboard_input requires text")
        elif not ({"dx", "dy"} & args.keys()):
            raise ActionError("wheel_mouse_input requires dx or dy")
        if self.rect is not None:
            rect = tuple(int(v) for v in self.rect)
            if len(rect) != 4:
                raise ActionError("rect must have 4 integers")
            object.__setattr__(self, "rect", rect)
        unknown = set(self.effects) - set(EFFECT_KEYS)
        if unknown:
            raise ActionError(f"unknown effect keys {sorted(unknown)}")
        effects = {
            k: tuple(sorted(v)) if isinstance(v, (list, tuple, set, frozenset)) else v
            for k, v in self.effects.items()
        }
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "effects", effects)

    @classmethod
    def click(cls, control_text: str | None, button: str = "left", double: bool = False, **kw) -> Action:
        return cls("click_input", {"button": button, "double": double}, control_text=control_text, **kw)

    @classmethod
    def type_text(cls, text: str, **kw) -> Action:
        return cls("keyboard_input", {"text": text}, **kw)

    @classmethod
    def scroll(cls, dy: int = -3, **kw) -> Action:
        return cls("wheel_mouse_input", {"dy": dy}, **kw)

    def token(self) -> tuple[str, str, str]:
        """Canonical (kind, principal arg, control text) used for sequence matching."""
        if self.kind == "click_input":
            principal = f"{self.args['button']}{':double' if self.args['double'] else ''}"
        elif self.kind == "keyboard_input":
            principal = self.args["text"]
        else:
            principal = f"{self.args.get('dx', 0)},{self.args.get('dy', 0)}"
        return (self.kind, principal, self.control_text or "")


class EventLog:
    """Append-only action record plus the environment facts checks observe."""

    def __init__(
        self,
        files: Iterable[str] = (),
        screen_text: Iterable[str] = (),
        control_text: Iterable[str] = (),
        clipboard: str | None = None,
        window_titles: Iterable[str] = (),
    ) -> None:
        self._actions: list[Action] = []
        self.files: set[str] = set(files)
        self.screen_text: set[str] = set(screen_text)
        self.control_text: set[str] = set(control_text)
        self.clipboard = clipboard
        self.window_titles: set[str] = set(window_titles)
        self._typed: list[str] = []

    @property
    def actions(self) -> tuple[Action, ...]:
        return tuple(self._actions)

    def __len__(self) -> int:
        return len(self._actions)

    def append(self, action: Action) -> None:
        self._actions.append(action)
        if action.kind == "keyboard_input":
            self._typed.append(action.args["text"])
        fx = action.effects
        self.files.update(fx.get("files", ()))
        self.screen_text.update(fx.get("screen_text", ()))
        self.control_text.update(fx.get("control_text", ()))
        if "clipboard" in fx:
            self.clipboard = fx["clipboard"]
        if "window_title" in fx:
            self.window_titles.add(fx["window_title"])

    def extend(self, actions: Iterable[Action]) -> None:
        for a in actions:
            self.append(a)

    @property
    def typed_stream(self) -> str:
        return "".join(self._typed)

    def facts(self) -> dict[str, Any]:
        return {
            "files": sorted(self.files),
            "screen_text": sorted(self.screen_text),
            "control_text": sorted(self.control_text),
            "clipboard": self.clipboard,
            "window_titles": sorted(self.window_titles),
        }

    def fork(self) -> EventLog:
        """Independent copy: same facts and actions."""
        other = EventLog()
        other._actions = list(self._actions)
        other._typed = list(self._typed)
        other.files = set(self.files)
        other.screen_text = set(self.screen_text)
        other.control_text = set(self.control_text)
        other.clipboard = self.clipboard
        other.window_titles = set(self.window_titles)
        return other


# -- check APIs ---------------------------------------------------------------


def check_mouse_clicks(log: EventLog, text: str) -> bool:
    """True if some click landed on a control whose text is exactly ``text``."""
    return any(a.kind == "click_input" and a.control_text == text for a in log.actions)


def check_keyboard_types(log: EventLog, text: str) -> bool:
    """True if ``text`` occurs in the concatenation of everything typed so far.

    Keystrokes may be split over several actions, hence the concatenated stream.
    """
    if not any(a.kind == "keyboard_input" for a in log.actions):
        return False
    return text in log.typed_stream


def check_file_exists(log: EventLog, file_path: str) -> bool:
    return file_path in log.files


def check_text_exists_via_ocr(log: EventLog, text: str) -> bool:
    return text in log.screen_text


def check_text_exists_via_control(log: EventLog, text: str) -> bool:
    return text in log.control_text


def check_text_exists(log: EventLog, text: str) -> bool:
    return check_text_exists_via_ocr(log, text) or check_text_exists_via_control(log, text)


# Five further checks complete the eleven-API surface.


def check_clipboard_equals(log: EventLog, text: str) -> bool:
    return log.clipboard is not None and log.clipboard == text


def check_window_title_contains(log: EventLog, text: str) -> bool:
    return any(text in title for title in log.window_titles)


def check_control_tree_contains(log: EventLog, text: str) -> bool:
    """Substring match against any control text (the exact variant is ``via_control``)."""
    return any(text in ct for ct in log.control_text)


def check_click_count_at_least(log: EventLog, text: str, count: int) -> bool:
    clicks = sum(1 for a in log.actions if a.kind == "click_input" and a.control_text == text)
    return count >= 1 and clicks >= count


def check_scroll_occurred(log: EventLog, min_distance: int = 1) -> bool:
    total = sum(
        abs(int(a.args.get("dx", 0))) + abs(int(a.args.get("dy", 0)))
        for a in log.actions
        if a.kind == "wheel_mouse_input"
    )
    return total > 0 and total >= min_distance


@dataclass(frozen=True)
class CheckApi:
    func: Callable[..., bool]
    required: tuple[str, ...]
    optional: tuple[str, ...] = ()
    documented: bool = True


CHECK_APIS: dict[str, CheckApi] = {
    "check_mouse_clicks": CheckApi(check_mouse_clicks, ("text",)),
    "check_keyboard_types": CheckApi(check_keyboard_types, ("text",)),
    "check_file_exists": CheckApi(check_file_exists, ("file_path",)),
    "check_text_exists_via_ocr": CheckApi(check_text_exists_via_ocr, ("text",)),
    "check_text_exists_via_control": CheckApi(check_text_exists_via_control, ("text",)),
    "check_text_exists": CheckApi(check_text_exists, ("text",)),
    "check_clipboard_equals": CheckApi(check_clipboard_equals, ("text",), documented=False),
    "check_window_title_contains": CheckApi(check_window_title_contains, ("text",), documented=False),
    "check_control_tree_contains": CheckApi(check_control_tree_contains, ("text",), documented=False),
    "check_click_count_at_least": CheckApi(check_click_count_at_least, ("text", "count"), documented=False),
    "check_scroll_occurred": CheckApi(check_scroll_occurred, (), ("min_distance",), documented=False),
}

_DEFAULT_REASONS = {
    "check_mouse_clicks": "agent did not click '{text}'",
    "check_keyboard_types": "'{text}' was not typed",
    "check_file_exists": "file '{file_path}' does not exist",
    "check_text_exists_via_ocr": "'{text}' is not visible on screen",
    "check_text_exists_via_control": "no control shows '{text}'",
    "check_text_exists": "'{text}' is not present on screen",
    "check_clipboard_equals": "the clipboard does not hold '{text}'",
    "check_window_title_contains": "no window title contains '{text}'",
    "check_control_tree_contains": "no control text contains '{text}'",
    "check_click_count_at_least": "'{text}' was not clicked {count} times",
    "check_scroll_occurred": "agent did not scroll",
}


@dataclass(frozen=True)
class Check:
    api: str
    args: Mapping[str, Any] = field(default_factory=dict)
    message: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", dict(self.args))
        spec = CHECK_APIS.get(self.api)
        if spec is None:
            raise MalformedFunctionError(f"unknown check API {self.api!r}")
        missing = [a for a in spec.required if a not in self.args]
        extra = set(self.args) - set(spec.required) - set(spec.optional)
        if missing or extra:
            raise MalformedFunctionError(
                f"{self.api}: bad arguments (missing {missing}, unexpected {sorted(extra)})"
            )
        if not self.message:
            reason = _DEFAULT_REASONS[self.api].format(**self.args)
            object.__setattr__(self, "message", f"Subtask execution failed because {reason}.")

    def run(self, log: EventLog) -> bool:
        return bool(CHECK_APIS[self.api].func(log, **self.args))

    def to_dict(self) -> dict[str, Any]:
        return {"api": self.api, "args": dict(self.args), "message": self.message}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Check:
        if "api" not in data:
            raise MalformedFunctionError("check entry lacks 'api'")
        return cls(data["api"], data.get("args", {}), data.get("message", ""))


@dataclass(frozen=True)
class EvalFunction:
    checks: tuple[Check, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "checks", tuple(self.checks))
        if not self.checks:
            raise MalformedFunctionError("an evaluation function needs at least one check")

    def __len__(self) -> int:
        return len(self.checks)

    def to_list(self) -> list[dict[str, Any]]:
        return [c.to_dict() for c in self.checks]

    @classmethod
    def from_list(cls, items: Sequence[Mapping[str, Any]]) -> EvalFunction:
        if not isinstance(items, Sequence) or isinstance(items, (str, bytes)):
            raise MalformedFunctionError("evaluation function must be a list of checks")
        return cls(tuple(Check.from_dict(i) for i in items))


@dataclass(frozen=True)
class EvalResult:
    success: bool
    message: str
    passed: int
    total: int

    def __post_init__(self) -> None:
        if not 0 <= self.passed <= self.total or self.total < 1:
            raise ValueError("progress out of range")
        if self.success and self.passed != self.total:
            raise ValueError("a successful result must have full progress")

    @property
    def progress(self) -> Fraction:
        return Fraction(self.passed, self.total)

    @property
    def progress_label(self) -> str:
        return f"{self.passed}/{self.total}"


SUCCESS_MESSAGE = "Subtask completed successfully"


def run_eval_function(fn: EvalFunction, log: EventLog) -> EvalResult:
    """Run checks in order; the first failure fixes the partial credit."""
    for check in fn.checks:
        if check.api not in CHECK_APIS:
            raise MalformedFunctionError(f"unknown check API {check.api!r}")
    total = len(fn.checks)
    for i, check in enumerate(fn.checks):
        if not check.run(log):
            return EvalResult(False, check.message, i, total)
    return EvalResult(True, SUCCESS_MESSAGE, total, total)
