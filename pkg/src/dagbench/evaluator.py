"""Graph-based evaluation: node state machine plus CR, LC, SR, AMS and sensitivity."""

from __future__ import annotations

import enum
import math
import statistics
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .env import Action, EvalFunction, EventLog, run_eval_function
from .model import ENUMERATION_CAP, GraphError, TaskGraph, all_topological_orders, depths

DEFAULT_MAX_STEPS = 15
MAX_COHERENCY_NODES = 20
BUDGET_EXHAUSTED = "step budget exhausted"


class NodeState(str, enum.Enum):
    WAITING = "Waiting"
    EVALUATING = "Evaluating"
    COMPLETED = "Completed"


class RunTerminatedError(RuntimeError):
    pass


def _fmt(value: Fraction) -> float:
    return round(float(value), 6)


@dataclass(frozen=True)
class MetricsReport:
    cr: Fraction
    lc: Fraction
    sr: bool
    ams: Fraction
    steps_used: int
    completion_order: tuple[str, ...] = ()
    failure_reason: str | None = None

    def __post_init__(self) -> None:
        if self.sr and self.cr != 1:
            raise ValueError("a successful run must have full coverage")

    def to_dict(self) -> dict[str, Any]:
        return {
            "cr": _fmt(self.cr),
            "cr_exact": str(self.cr),
            "lc": _fmt(self.lc),
            "lc_exact": str(self.lc),
            "sr": self.sr,
            "ams": _fmt(self.ams),
            "ams_exact": str(self.ams),
            "steps_used": self.steps_used,
            "completion_order": list(self.completion_order),
            "failure_reason": self.failure_reason,
        }


class EvaluationRun:
    """Tracks Waiting/Evaluating/Completed states of one task while an agent acts.

    After each action every Evaluating node's function is run against the log.
    Nodes that pass become Completed (simultaneous completions are recorded in
    id order) and successors whose predecessors are all Completed start
    Evaluating. ``max_steps`` consecutive actions without a completion fail the
    run.
    """

    def __init__(
        self,
        graph: TaskGraph,
        bindings: Mapping[str, EvalFunction],
        max_steps: int = DEFAULT_MAX_STEPS,
        log: EventLog | None = None,
    ) -> None:
        if max_steps < 1:
            raise ValueError("max_steps must be positive")
        missing = [n for n in graph.nodes if n not in bindings]
        if missing:
            raise KeyError(f"no evaluation function bound for {', '.join(missing)}")
        self.graph = graph
        self.bindings = dict(bindings)
        self.max_steps = max_steps
        self.log = log if log is not None else EventLog()
        self.states = {
            n: NodeState.EVALUATING if not graph.predecessors[n] else NodeState.WAITING for n in graph.nodes
        }
        self.completion_order: list[str] = []
        self.steps_since_last_completion = 0
        self.steps_used = 0
        self.failure_reason: str | None = None

    @property
    def evaluating(self) -> list[str]:
        return [n for n in self.graph.nodes if self.states[n] is NodeState.EVALUATING]

    @property
    def completed(self) -> set[str]:
        return set(self.completion_order)

    @property
    def succeeded(self) -> bool:
        return len(self.completion_order) == len(self.graph.nodes)

    @property
    def terminated(self) -> bool:
        return self.succeeded or self.failure_reason is not None

    def step(self, action: Action) -> list[str]:
        """Record one agent action; return the nodes it completed."""
        if self.terminated:
            raise RunTerminatedError("cannot step a terminated run")
        self.log.append(action)
        self.steps_used += 1
        done = [n for n in self.evaluating if run_eval_function(self.bindings[n], self.log).success]
        for n in done:
            self.states[n] = NodeState.COMPLETED
            self.completion_order.append(n)
        for n in done:
            for m in self.graph.successors(n):
                if self.states[m] is NodeState.WAITING and all(
                    self.states[p] is NodeState.COMPLETED for p in self.graph.predecessors[m]
                ):
                    self.states[m] = NodeState.EVALUATING
        if done:
            self.steps_since_last_completion = 0
        else:
            self.steps_since_last_completion += 1
            if self.steps_since_last_completion >= self.max_steps:
                self.failure_reason = BUDGET_EXHAUSTED
        return done

    def fail(self, reason: str) -> None:
        if not self.terminated:
            self.failure_reason = reason

    def report(
        self,
        app_of: Mapping[str, str] | None = None,
        predicted: Sequence[Action] | None = None,
        reference: Sequence[Action] | None = None,
    ) -> MetricsReport:
        app_of = self.graph.applications if app_of is None else app_of
        ams = action_match_score(predicted, reference) if reference is not None else Fraction(0)
        return MetricsReport(
            cr=coverage_rate(self.graph, self.completion_order),
            lc=logical_consistency(self.graph, self.completion_order, app_of),
            sr=self.succeeded,
            ams=ams,
            steps_used=self.steps_used,
            completion_order=tuple(self.completion_order),
            failure_reason=None if self.succeeded else (self.failure_reason or "incomplete"),
        )


def step(run: EvaluationRun, action: Action, log: EventLog | None = None) -> EvaluationRun:
    if log is not None and log is not run.log:
        raise ValueError("run is bound to a different event log")
    run.step(action)
    return run


def evaluating_from_scratch(graph: TaskGraph, completed: set[str]) -> set[str]:
    """Nodes that should be Evaluating given only the completed set."""
    return {
        n for n in graph.nodes if n not in completed and all(p in completed for p in graph.predecessors[n])
    }


# -- metrics ------------------------------------------------------------------


def coverage_rate(graph: TaskGraph, completed: Sequence[str] | set[str]) -> Fraction:
    """Depth-weighted share of completed nodes, in exact arithmetic."""
    d = depths(graph)
    done = set(completed)
    unknown = done - d.keys()
    if unknown:
        raise GraphError(f"unknown node(s) {sorted(unknown)}")
    total = sum(d.values())
    if total == 0:
        return Fraction(0)
    return Fraction(sum(d[n] for n in done), total)


def coherency_score(sequence: Sequence[str], app_of: Mapping[str, str]) -> int:
    return sum(1 for a, b in zip(sequence, sequence[1:]) if app_of[a] == app_of[b])


def max_coherency(graph: TaskGraph, app_of: Mapping[str, str]) -> int:
    """Best coherency score over all topological orders.

    Dynamic programming over down-closed node subsets, keyed by the
    application of the last node placed.
    """
    n = len(graph.nodes)
    if n > MAX_COHERENCY_NODES:
        raise GraphError(f"{n} nodes exceeds the coherency limit of {MAX_COHERENCY_NODES}")
    if n == 0:
        return 0
    depths(graph)  # rejects cycles
    unknown = [node for node in graph.nodes if node not in app_of]
    if unknown:
        raise KeyError(f"no application recorded for {', '.join(unknown)}")
    index = {node: i for i, node in enumerate(graph.nodes)}
    apps = [app_of[node] for node in graph.nodes]
    pred_mask = [0] * n
    for u, v in graph.edge_set():
        pred_mask[index[v]] |= 1 << index[u]

    layer: dict[int, dict[str | None, int]] = {0: {None: 0}}
    for _ in range(n):
        nxt: dict[int, dict[str | None, int]] = {}
        for mask, by_app in layer.items():
            for i in range(n):
                bit = 1 << i
                if mask & bit or pred_mask[i] & mask != pred_mask[i]:
                    continue
                slot = nxt.setdefault(mask | bit, {})
                app = apps[i]
                best = max(score + (last == app) for last, score in by_app.items())
                if slot.get(app, -1) < best:
                    slot[app] = best
        layer = nxt
    (final,) = layer.values()
    return max(final.values())


def max_coherency_bruteforce(graph: TaskGraph, app_of: Mapping[str, str], cap: int = ENUMERATION_CAP) -> int:
    return max(coherency_score(o, app_of) for o in all_topological_orders(graph, cap))


def _check_partial_order(graph: TaskGraph, sequence: Sequence[str]) -> None:
    seen: set[str] = set()
    for node in sequence:
        if node not in graph.predecessors:
            raise GraphError(f"unknown node {node!r}")
        if node in seen:
            raise GraphError(f"node {node!r} appears twice")
        missing = [p for p in graph.predecessors[node] if p not in seen]
        if missing:
            raise GraphError(f"{node!r} precedes its predecessor(s) {missing}")
        seen.add(node)


def logical_consistency(graph: TaskGraph, sequence: Sequence[str], app_of: Mapping[str, str]) -> Fraction:
    """Agent coherency over the best achievable; 1 when no order can be coherent."""
    _check_partial_order(graph, sequence)
    best = max_coherency(graph, app_of)
    if best == 0:
        return Fraction(1)
    return Fraction(coherency_score(sequence, app_of), best)


def edit_distance(a: Sequence[Any], b: Sequence[Any]) -> int:
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def action_match_score(predicted: Sequence[Action] | None, reference: Sequence[Action]) -> Fraction:
    """1 - edit distance / longer length, over canonical action tokens."""
    p = [a.token() for a in predicted or ()]
    r = [a.token() for a in reference]
    longest = max(len(p), len(r))
    if longest == 0:
        return Fraction(1)
    return 1 - Fraction(edit_distance(p, r), longest)


def sensitivity(scores: Sequence[float | Fraction], population: bool = True) -> float:
    """Standard deviation of one model's scores across instruction reorderings."""
    if not scores:
        raise ValueError("sensitivity needs at least one score")
    values = [Fraction(s) if isinstance(s, Fraction) else Fraction(str(s)) for s in scores]
    if len(values) == 1:
        return 0.0
    if population:
        return math.sqrt(statistics.pvariance(values))
    return math.sqrt(statistics.variance(values))


@dataclass
class BatchRow:
    task_id: str
    capabilities: list[str] = field(default_factory=list)
    report: MetricsReport | None = None

    CSV_COLUMNS = ("task_id", "capabilities", "cr", "lc", "sr", "ams", "steps")

    def as_csv_row(self) -> list[str]:
        r = self.report
        assert r is not None
        return [
            self.task_id,
            ";".join(self.capabilities),
            f"{float(r.cr):.6f}",
            f"{float(r.lc):.6f}",
            "1" if r.sr else "0",
            f"{float(r.ams):.6f}",
            str(r.steps_used),
        ]
