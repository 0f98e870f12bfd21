"""Bottom-up task composition from a subtask pool.

Subtasks are wired by matching output resource categories to input
categories, grouped by intent, searched for a subset whose complexity meets a
constraint, and given an instruction whose connectives encode the DAG exactly
so that it can be checked against the graph.
"""

from __future__ import annotations

import itertools
import random
import re
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Protocol

from .apps import AppCategoryRegistry
from .complexity import DIMENSIONS, ComplexityConfig, ComplexityProfile, Level, classify
from .model import (
    ENUMERATION_CAP,
    CycleError,
    GraphError,
    Subtask,
    TaskGraph,
    count_linear_extensions,
    find_cycle,
    iter_topological_orders,
    levels,
    topological_sort,
    validate_graph,
)

DEFAULT_BUDGET = 10_000
MAX_STORED_ORDERS = 10_000


class CompositionError(ValueError):
    pass


class UnsatisfiedInputError(CompositionError):
    def __init__(self, subtask: str, category: str) -> None:
        self.subtask = subtask
        self.category = category
        super().__init__(f"unsatisfied input {category!r} of subtask {subtask!r}")


class InfeasibleConstraintError(CompositionError):
    def __init__(self, message: str, closest: ComplexityProfile | None) -> None:
        self.closest = closest
        super().__init__(message)


class InstructionParseError(ValueError):
    pass


class SubtaskPool:
    """Id-indexed subtasks plus an index from resource category to producers."""

    def __init__(self, subtasks: Iterable[Subtask] = ()) -> None:
        self._subtasks: dict[str, Subtask] = {}
        for s in subtasks:
            if s.id in self._subtasks:
                raise ValueError(f"duplicate subtask id {s.id!r}")
            self._subtasks[s.id] = s
        self.producers: dict[str, tuple[str, ...]] = {}
        for sid in sorted(self._subtasks):
            for cat in self._subtasks[sid].output_resources:
                self.producers[cat] = self.producers.get(cat, ()) + (sid,)

    def __getitem__(self, sid: str) -> Subtask:
        return self._subtasks[sid]

    def __contains__(self, sid: object) -> bool:
        return sid in self._subtasks

    def __iter__(self):
        return iter(self._subtasks[k] for k in sorted(self._subtasks))

    def __len__(self) -> int:
        return len(self._subtasks)

    def ids(self) -> list[str]:
        return sorted(self._subtasks)


@dataclass(frozen=True)
class IntentGroup:
    intent: str
    members: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(self.members))
        if len(set(self.members)) != len(self.members):
            raise ValueError("intent group members must be distinct")


@dataclass(frozen=True)
class CompositionConstraint:
    levels: Mapping[str, Level] = field(default_factory=dict)
    min_nodes: int = 1
    max_nodes: int | None = None
    seed: int = 0
    budget: int = DEFAULT_BUDGET

    def __post_init__(self) -> None:
        parsed = {}
        for dim, lvl in self.levels.items():
            if dim not in DIMENSIONS:
                raise ValueError(f"unknown dimension {dim!r}")
            parsed[dim] = Level.parse(lvl)
        object.__setattr__(self, "levels", parsed)
        if self.min_nodes < 1:
            raise ValueError("min_nodes must be at least 1")
        if self.max_nodes is not None and self.max_nodes < self.min_nodes:
            raise ValueError("min_nodes exceeds max_nodes")

    def violations(self, profile: ComplexityProfile) -> list[str]:
        return [d for d, lvl in self.levels.items() if profile.level(d) != lvl]


def wire_edges(members: Sequence[Subtask], environment: Iterable[str] = ()) -> set[tuple[str, str]]:
    """Dependency edges implied by resources among ``members``.

    Each input category of a consumer is served by the lowest-id member that
    outputs it (never the consumer itself). Categories listed in
    ``environment`` may go unserved.
    """
    ids = [m.id for m in members]
    if len(set(ids)) != len(ids):
        raise ValueError("member ids must be distinct")
    provided = set(environment)
    producers: dict[str, list[str]] = {}
    for m in sorted(members, key=lambda s: s.id):
        for cat in m.output_resources:
            producers.setdefault(cat, []).append(m.id)
    edges: set[tuple[str, str]] = set()
    for m in members:
        for cat in m.input_resources:
            candidates = [p for p in producers.get(cat, ()) if p != m.id]
            if candidates:
                edges.add((candidates[0], m.id))
            elif cat not in provided:
                raise UnsatisfiedInputError(m.id, cat)
    cycle = find_cycle(TaskGraph.from_edges(ids, edges))
    if cycle is not None:
        raise CycleError(cycle)
    return edges


def topo_orders_for(graph: TaskGraph, cap: int = ENUMERATION_CAP, limit: int = MAX_STORED_ORDERS) -> list[list[str]]:
    """All orders when small enough to store, otherwise one witness order."""
    if len(graph.nodes) <= cap and count_linear_extensions(graph) <= limit:
        return list(iter_topological_orders(graph))
    return [topological_sort(graph)]


def build_graph(
    members: Sequence[Subtask],
    intent: str = "",
    environment: Iterable[str] = (),
    params: Mapping[str, Mapping[str, str]] | None = None,
) -> TaskGraph:
    edges = wire_edges(members, environment)
    graph = TaskGraph.from_edges(
        [m.id for m in members],
        edges,
        intent=intent,
        applications={m.id: m.application for m in members},
    )
    by_id = {m.id: m for m in members}
    graph = graph.replace(
        successful_topo=topo_orders_for(graph),
        instruction=render_instruction(graph, by_id, params),
    )
    return graph


def _candidate_subsets(members: Sequence[str], constraint: CompositionConstraint) -> Iterable[tuple[str, ...]]:
    order = list(members)
    random.Random(constraint.seed).shuffle(order)
    hi = len(order) if constraint.max_nodes is None else min(constraint.max_nodes, len(order))
    for size in range(hi, constraint.min_nodes - 1, -1):
        for combo in itertools.combinations(order, size):
            yield tuple(sorted(combo))


def compose(
    pool: SubtaskPool,
    group: IntentGroup,
    constraint: CompositionConstraint | None = None,
    registry: AppCategoryRegistry | None = None,
    environment: Iterable[str] = (),
    config: ComplexityConfig | None = None,
) -> TaskGraph:
    """Compose the largest member subset whose complexity meets ``constraint``.

    Subsets are tried from the whole group downwards in a seeded order; at
    most ``constraint.budget`` candidate graphs are classified.
    """
    constraint = constraint or CompositionConstraint()
    registry = registry or AppCategoryRegistry.default()
    missing = [m for m in group.members if m not in pool]
    if missing:
        raise KeyError(f"intent group references unknown subtasks {missing}")
    env = set(environment)
    closest: tuple[int, ComplexityProfile] | None = None
    tried = 0
    for subset in _candidate_subsets(group.members, constraint):
        if tried >= constraint.budget:
            break
        tried += 1
        members = [pool[s] for s in subset]
        try:
            edges = wire_edges(members, env)
        except (UnsatisfiedInputError, CycleError):
            continue
        graph = TaskGraph.from_edges(subset, edges, applications={m.id: m.application for m in members})
        profile = classify(graph, registry, config=config)
        bad = constraint.violations(profile)
        if not bad:
            return build_graph(members, group.intent, env)
        if closest is None or len(bad) < closest[0]:
            closest = (len(bad), profile)
    wanted = ", ".join(f"{d}={lvl.value}" for d, lvl in constraint.levels.items()) or "no level constraints"
    raise InfeasibleConstraintError(
        f"infeasible constraint ({wanted}) for intent {group.intent!r} after {tried} candidate graphs",
        None if closest is None else closest[1],
    )


class IntentExtractor(Protocol):
    def __call__(self, pool: SubtaskPool, environment: Iterable[str] = ()) -> list[IntentGroup]: ...


def group_by_resource_chains(pool: SubtaskPool, environment: Iterable[str] = ()) -> list[IntentGroup]:
    """Reference intent extraction: connected components of the resource relation."""
    parent = {sid: sid for sid in pool.ids()}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for s in pool:
        for cat in s.input_resources:
            for p in pool.producers.get(cat, ()):
                if p != s.id:
                    a, b = find(p), find(s.id)
                    if a != b:
                        parent[max(a, b)] = min(a, b)
    comps: dict[str, list[str]] = {}
    for sid in pool.ids():
        comps.setdefault(find(sid), []).append(sid)
    groups = []
    for root in sorted(comps):
        members = comps[root]
        apps = sorted({pool[m].application for m in members})
        groups.append(IntentGroup(f"Workflow across {', '.join(apps)}", tuple(members)))
    return groups


# -- instruction grammar ------------------------------------------------------
#
# Nodes are listed level by level (depth order, ids sorted within a level).
# ", then " opens the next level and means "every node of this level depends
# on every node of the previous level"; "; meanwhile, " separates nodes of
# one level. When a node's predecessors differ from the whole previous level
# its text carries " (after steps i, j)" with 1-based positions in the text.

THEN = ", then "
MEANWHILE = "; meanwhile, "
_AFTER = re.compile(r" \(after steps? (\d+(?:, \d+)*)\)")


def _node_text(text: str) -> str:
    return text.strip().rstrip(".").strip()


def render_instruction(
    graph: TaskGraph,
    subtasks: Mapping[str, Subtask] | None = None,
    params: Mapping[str, Mapping[str, str]] | None = None,
    texts: Mapping[str, str] | None = None,
    shuffle_seed: int | None = None,
) -> str:
    """Deterministic instruction from which the graph's edges can be recovered.

    Node texts come from ``texts`` or are instantiated from ``subtasks`` with
    ``params`` (default: each subtask's first parameter set). ``shuffle_seed``
    permutes nodes within a level, giving equivalent reorderings of the text.
    """
    if texts is None:
        if subtasks is None:
            raise ValueError("render_instruction needs subtasks or texts")
        params = params or {}
        texts = {n: subtasks[n].instantiate(params.get(n)) for n in graph.nodes}
    problems = validate_graph(graph)
    if problems:
        raise GraphError("; ".join(problems))
    lvls = levels(graph)
    if shuffle_seed is not None:
        rng = random.Random(shuffle_seed)
        lvls = [rng.sample(lv, len(lv)) for lv in lvls]
    position = {n: i for i, n in enumerate(n for lv in lvls for n in lv)}
    parts: list[str] = []
    for k, lv in enumerate(lvls):
        clauses = []
        for n in lv:
            clause = _node_text(texts[n])
            preds = graph.predecessors[n]
            if k > 0 and set(preds) != set(lvls[k - 1]):
                steps = sorted(position[p] + 1 for p in preds)
                word = "step" if len(steps) == 1 else "steps"
                clause += f" (after {word} {', '.join(map(str, steps))})"
            clauses.append(clause)
        parts.append(MEANWHILE.join(clauses))
    if not parts:
        return ""
    return THEN.join(parts) + "."


@dataclass(frozen=True)
class ParsedInstruction:
    nodes: tuple[str, ...]
    edges: frozenset[tuple[str, str]]


def parse_instruction(instruction: str, node_texts: Mapping[str, str]) -> ParsedInstruction:
    """Recover nodes and edges from text produced by :func:`render_instruction`."""
    body = instruction.strip()
    if not body:
        return ParsedInstruction((), frozenset())
    if not body.endswith("."):
        raise InstructionParseError("instruction does not end with '.'")
    body = body[:-1]
    candidates = sorted(((n, _node_text(t)) for n, t in node_texts.items()), key=lambda x: -len(x[1]))
    seen_text: dict[str, str] = {}
    for n, t in candidates:
        if not t:
            raise InstructionParseError(f"node {n!r} has empty text")
        if t in seen_text:
            raise InstructionParseError(f"nodes {seen_text[t]!r} and {n!r} share the same text")
        seen_text[t] = n

    # Backtracking scan: node text, optional annotation, then a connective or the end.
    def scan(pos: int, used: frozenset[str]) -> list[tuple[str, tuple[int, ...] | None, str]] | None:
        for n, t in candidates:
            if n in used or not body.startswith(t, pos):
                continue
            p = pos + len(t)
            after: tuple[int, ...] | None = None
            m = _AFTER.match(body, p)
            if m:
                after = tuple(int(x) for x in m.group(1).split(", "))
                p = m.end()
            if p == len(body):
                return [(n, after, "")]
            for conn in (THEN, MEANWHILE):
                if body.startswith(conn, p):
                    rest = scan(p + len(conn), used | {n})
                    if rest is not None:
                        return [(n, after, conn)] + rest
        return None

    items = scan(0, frozenset())
    if items is None:
        raise InstructionParseError("instruction does not follow the connective grammar")

    lvls: list[list[str]] = [[]]
    annotations: dict[str, tuple[int, ...] | None] = {}
    for n, after, conn in items:
        lvls[-1].append(n)
        annotations[n] = after
        if conn == THEN:
            lvls.append([])
    order = [n for lv in lvls for n in lv]
    edges = set()
    for k, lv in enumerate(lvls):
        for n in lv:
            after = annotations[n]
            if after is not None:
                if k == 0:
                    raise InstructionParseError(f"first-level step {n!r} cannot have prerequisites")
                for i in after:
                    if not 1 <= i <= len(order):
                        raise InstructionParseError(f"step {i} out of range")
                    edges.add((order[i - 1], n))
            elif k > 0:
                edges.update((p, n) for p in lvls[k - 1])
    return ParsedInstruction(tuple(order), frozenset(edges))


def infer_dependencies(instruction: str, node_texts: Mapping[str, str]) -> set[tuple[str, str]]:
    return set(parse_instruction(instruction, node_texts).edges)


DependencyInferrer = Callable[[str, Mapping[str, str]], set[tuple[str, str]]]


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    missing_edges: tuple[tuple[str, str], ...] = ()
    extra_edges: tuple[tuple[str, str], ...] = ()
    missing_nodes: tuple[str, ...] = ()
    extra_nodes: tuple[str, ...] = ()

    def lines(self) -> list[str]:
        out = [f"missing edge {u} -> {v}" for u, v in self.missing_edges]
        out += [f"extra edge {u} -> {v}" for u, v in self.extra_edges]
        out += [f"node {n} not mentioned" for n in self.missing_nodes]
        out += [f"unexpected node {n}" for n in self.extra_nodes]
        return out


def validate_consistency(
    graph: TaskGraph,
    instruction: str,
    node_texts: Mapping[str, str],
    inferrer: DependencyInferrer | None = None,
) -> ConsistencyReport:
    """Compare dependencies inferred from the instruction alone with the graph."""
    if inferrer is None:
        parsed = parse_instruction(instruction, node_texts)
        nodes, inferred = set(parsed.nodes), set(parsed.edges)
    else:
        inferred = set(inferrer(instruction, node_texts))
        nodes = set(graph.nodes) if instruction.strip() else set()
    truth = set(graph.edge_set())
    report = ConsistencyReport(
        consistent=False,
        missing_edges=tuple(sorted(truth - inferred)),
        extra_edges=tuple(sorted(inferred - truth)),
        missing_nodes=tuple(sorted(set(graph.nodes) - nodes)),
        extra_nodes=tuple(sorted(nodes - set(graph.nodes))),
    )
    ok = not (report.missing_edges or report.extra_edges or report.missing_nodes or report.extra_nodes)
    return ConsistencyReport(ok, report.missing_edges, report.extra_edges, report.missing_nodes, report.extra_nodes)


def node_texts(graph: TaskGraph, subtasks: Mapping[str, Subtask], params=None) -> dict[str, str]:
    params = params or {}
    return {n: subtasks[n].instantiate(params.get(n)) for n in graph.nodes}
