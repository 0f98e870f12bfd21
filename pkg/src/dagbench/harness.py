"""Scripted agents, batch task runs and trajectory/evaluation cross-verification."""

from __future__ import annotations

import random
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, replace
from typing import Protocol

from .env import Action, EvalFunction, EventLog, MalformedFunctionError, run_eval_function
from .evaluator import DEFAULT_MAX_STEPS, EvaluationRun, MetricsReport
from .model import Subtask, TaskGraph, is_topological_order, topological_sort

POLICIES = ("perfect", "noisy", "shuffled", "stall")
NOISE_TEXT = "<misclick>"
STALL_ACTION = Action.click(None, description="idle click on empty desktop area")


def script_for(fn: EvalFunction) -> list[Action]:
    """Shortest action list that makes every check of ``fn`` pass on a fresh log."""
    actions: list[Action] = []
    for check in fn.checks:
        a = check.args
        if check.api == "check_mouse_clicks":
            actions.append(Action.click(a["text"]))
        elif check.api == "check_click_count_at_least":
            actions.extend(Action.click(a["text"]) for _ in range(int(a["count"])))
        elif check.api == "check_keyboard_types":
            actions.append(Action.type_text(a["text"]))
        elif check.api == "check_file_exists":
            actions.append(Action.type_text("^s", effects={"files": [a["file_path"]]}))
        elif check.api in ("check_text_exists_via_ocr", "check_text_exists"):
            actions.append(Action.scroll(effects={"screen_text": [a["text"]]}))
        elif check.api in ("check_text_exists_via_control", "check_control_tree_contains"):
            actions.append(Action.scroll(effects={"control_text": [a["text"]]}))
        elif check.api == "check_clipboard_equals":
            actions.append(Action.type_text("^c", effects={"clipboard": a["text"]}))
        elif check.api == "check_window_title_contains":
            actions.append(Action.scroll(effects={"window_title": a["text"]}))
        elif check.api == "check_scroll_occurred":
            actions.append(Action.scroll(dy=-max(1, int(a.get("min_distance", 1)))))
        else:  # pragma: no cover - CHECK_APIS and this table move together
            raise MalformedFunctionError(f"no script rule for {check.api}")
    return actions


def random_linear_extension(graph: TaskGraph, rng: random.Random) -> list[str]:
    indeg = {n: len(graph.predecessors[n]) for n in graph.nodes}
    ready = sorted(n for n, d in indeg.items() if d == 0)
    order = []
    while ready:
        n = ready.pop(rng.randrange(len(ready)))
        order.append(n)
        for m in graph.successors(n):
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
        ready.sort()
    return order


@dataclass(frozen=True)
class ScriptedAgent:
    """A deterministic stand-in for a model-driven agent.

    ``perfect`` replays node scripts in ``order``; ``noisy`` does the same but
    each action lands on a wrong control with probability ``p_fail``;
    ``shuffled`` replays scripts in a seeded random topological order;
    ``stall`` never does anything useful.
    """

    policy: str = "perfect"
    order: tuple[str, ...] | None = None
    p_fail: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if not 0.0 <= self.p_fail <= 1.0:
            raise ValueError("p_fail must lie in [0, 1]")
        if self.order is not None:
            object.__setattr__(self, "order", tuple(self.order))

    def node_order(self, graph: TaskGraph) -> list[str]:
        if self.policy == "shuffled":
            return random_linear_extension(graph, random.Random(self.seed))
        if self.order is None:
            return list(graph.successful_topo[0]) if graph.successful_topo else topological_sort(graph)
        order = list(self.order)
        allowed = (
            order in [list(o) for o in graph.successful_topo]
            if graph.successful_topo
            else is_topological_order(graph, order)
        )
        if not allowed:
            raise ValueError("agent order is not one of the task's successful topological orders")
        return order

    def plan(self, graph: TaskGraph, scripts: Mapping[str, Sequence[Action]]) -> list[Action]:
        if self.policy == "stall":
            return []
        actions = [a for n in self.node_order(graph) for a in scripts[n]]
        if self.policy == "noisy":
            rng = random.Random(self.seed)
            actions = [replace(a, control_text=NOISE_TEXT) if rng.random() < self.p_fail else a for a in actions]
        return actions


def reference_actions(graph: TaskGraph, scripts: Mapping[str, Sequence[Action]]) -> list[Action]:
    return ScriptedAgent("perfect").plan(graph, scripts)


def run_task(
    agent: ScriptedAgent,
    graph: TaskGraph,
    bindings: Mapping[str, EvalFunction],
    scripts: Mapping[str, Sequence[Action]] | None = None,
    max_steps: int = DEFAULT_MAX_STEPS,
    fixture: Callable[[], EventLog] | None = None,
) -> MetricsReport:
    """Drive the evaluator with the agent's actions until the run terminates.

    Once the agent's plan is exhausted it idles, so an unfinished task always
    ends by exhausting the step budget.
    """
    missing = [n for n in graph.nodes if n not in bindings]
    if missing:
        raise KeyError(f"no evaluation function bound for {', '.join(missing)}")
    if scripts is None:
        scripts = {n: script_for(bindings[n]) for n in graph.nodes}
    missing = [n for n in graph.nodes if n not in scripts]
    if missing:
        raise KeyError(f"no action script for {', '.join(missing)}")
    run = EvaluationRun(graph, bindings, max_steps, fixture() if fixture else None)
    plan = agent.plan(graph, scripts)
    for action in plan:
        if run.terminated:
            break
        run.step(action)
    while not run.terminated:
        run.step(STALL_ACTION)
    return run.report(predicted=run.log.actions, reference=reference_actions(graph, scripts))


def replay(actions: Sequence[Action], fixture: Callable[[], EventLog] | None = None) -> EventLog:
    log = fixture() if fixture else EventLog()
    log.extend(actions)
    return log


# -- cross-verification -------------------------------------------------------


class SynthesisError(ValueError):
    """A synthesizer returned something that is not a trajectory / function."""


class TrajectorySynthesizer(Protocol):
    def __call__(self, subtask: Subtask, feedback: Sequence[str]) -> Sequence[Action]: ...


class EvalSynthesizer(Protocol):
    def __call__(self, subtask: Subtask, feedback: Sequence[str]) -> EvalFunction: ...


@dataclass
class TableTrajectorySynthesizer:
    """Looks up a fixed trajectory per subtask id; ignores feedback."""

    table: Mapping[str, Sequence[Action]]

    def __call__(self, subtask: Subtask, feedback: Sequence[str]) -> Sequence[Action]:
        return self.table[subtask.id]


@dataclass
class TableEvalSynthesizer:
    """Looks up a check list per subtask id.

    Checks whose failure message already appeared in the feedback are dropped
    on later rounds, the table-driven analogue of repairing a bad check.
    """

    table: Mapping[str, EvalFunction]
    repair: bool = True

    def __call__(self, subtask: Subtask, feedback: Sequence[str]) -> EvalFunction:
        fn = self.table[subtask.id]
        if not self.repair or not feedback:
            return fn
        kept = tuple(c for c in fn.checks if c.message not in feedback)
        return EvalFunction(kept) if kept else fn


@dataclass(frozen=True)
class VerificationOutcome:
    iterations: int
    status: str
    transcript: tuple[str, ...] = ()
    trajectory: tuple[Action, ...] = ()
    function: EvalFunction | None = None

    @property
    def verified(self) -> bool:
        return self.status == "verified"

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "status": self.status,
            "transcript": list(self.transcript),
            "function": self.function.to_list() if self.function else None,
        }


def cross_verify(
    traj_synth: TrajectorySynthesizer,
    eval_synth: EvalSynthesizer,
    subtask: Subtask,
    max_iters: int = 3,
    fixture: Callable[[], EventLog] | None = None,
) -> VerificationOutcome:
    """Alternate trajectory and check-list synthesis until they agree."""
    if max_iters < 1:
        raise ValueError("max_iters must be positive")
    feedback: list[str] = []
    trajectory: tuple[Action, ...] = ()
    fn: EvalFunction | None = None
    for i in range(1, max_iters + 1):
        trajectory = _as_trajectory(traj_synth(subtask, tuple(feedback)))
        fn = _as_function(eval_synth(subtask, tuple(feedback)))
        result = run_eval_function(fn, replay(trajectory, fixture))
        if result.success:
            return VerificationOutcome(i, "verified", tuple(feedback), trajectory, fn)
        feedback.append(result.message)
    return VerificationOutcome(max_iters, "exhausted", tuple(feedback), trajectory, fn)


def _as_trajectory(value: object) -> tuple[Action, ...]:
    if isinstance(value, (str, bytes)) or not isinstance(value, Sequence):
        raise SynthesisError("trajectory synthesizer must return a sequence of actions")
    if not all(isinstance(a, Action) for a in value):
        raise SynthesisError("trajectory contains a non-action item")
    return tuple(value)


def _as_function(value: object) -> EvalFunction:
    if isinstance(value, EvalFunction):
        return value
    try:
        return EvalFunction.from_list(value)  # type: ignore[arg-type]
    except (MalformedFunctionError, TypeError, AttributeError) as exc:
        raise SynthesisError(f"evaluation synthesizer returned a malformed function: {exc}") from exc


def discriminative_check(fn: EvalFunction, foreign_logs: Sequence[EventLog]) -> bool:
    """True when ``fn`` rejects every trajectory taken from other tasks."""
    if len(foreign_logs) < 3:
        raise ValueError("discriminative check needs at least 3 foreign trajectories")
    return not any(run_eval_function(fn, log).success for log in foreign_logs)
