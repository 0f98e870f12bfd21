"""Task-graph data model: resources, subtasks, DAG tasks and their topology."""

from __future__ import annotations

import re
import string
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from heapq import heapify, heappop, heappush

ENUMERATION_CAP = 12


class GraphError(ValueError):
    """Invalid graph input (unknown node, cycle, oversized enumeration)."""


class CycleError(GraphError):
    def __init__(self, cycle: Sequence[str]) -> None:
        self.cycle = tuple(cycle)
        super().__init__("cycle: " + " -> ".join(self.cycle))


@dataclass(frozen=True)
class Resource:
    """A resource category, optionally instantiated with a concrete parameter."""

    category: str
    parameter: str | None = None

    def __post_init__(self) -> None:
        if not self.category or re.search(r"\s", self.category):
            raise ValueError(f"invalid resource category {self.category!r}")

    def matches(self, other: Resource) -> bool:
        return self.category == other.category


def template_fields(template: str) -> list[str]:
    """Placeholder names in a ``str.format`` template, in order of appearance."""
    names = []
    for _, name, _, _ in string.Formatter().parse(template):
        if name is not None and name not in names:
            names.append(name)
    return names


@dataclass(frozen=True)
class Subtask:
    id: str
    instruction_template: str
    application: str
    available_parameters: tuple[Mapping[str, str], ...] = ()
    os: str = "Windows"
    input_resources: tuple[str, ...] = ()
    output_resources: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "available_parameters", tuple(dict(p) for p in self.available_parameters))
        object.__setattr__(self, "input_resources", tuple(self.input_resources))
        object.__setattr__(self, "output_resources", tuple(self.output_resources))

    def problems(self) -> list[str]:
        out = []
        if not self.id:
            out.append("empty subtask id")
        placeholders = template_fields(self.instruction_template)
        for i, params in enumerate(self.available_parameters):
            missing = [p for p in placeholders if p not in params]
            if missing:
                out.append(f"{self.id}: parameter set {i} lacks {', '.join(missing)}")
        for label, res in (("input", self.input_resources), ("output", self.output_resources)):
            if len(set(res)) != len(res):
                out.append(f"{self.id}: duplicate {label} resource categories")
            for r in res:
                try:
                    Resource(r)
                except ValueError as exc:
                    out.append(f"{self.id}: {exc}")
        return out

    def instantiate(self, params: Mapping[str, str] | None = None) -> str:
        if params is None:
            params = self.available_parameters[0] if self.available_parameters else {}
        missing = [p for p in template_fields(self.instruction_template) if p not in params]
        if missing:
            raise KeyError(f"node {self.id}: missing parameter {missing[0]!r}")
        return self.instruction_template.format(**params)


@dataclass(frozen=True, eq=False)
class TaskGraph:
    """A DAG of subtask ids.

    ``edges`` maps a node to its successors. Duplicate edges are collapsed and
    every node gets an (possibly empty) successor list. ``applications`` maps
    node ids to application names when the subtasks are known.
    """

    nodes: tuple[str, ...]
    edges: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    intent: str = ""
    instruction: str = ""
    successful_topo: tuple[tuple[str, ...], ...] = ()
    applications: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        nodes = tuple(sorted(dict.fromkeys(self.nodes)))
        succ: dict[str, tuple[str, ...]] = {n: () for n in nodes}
        for src, dsts in self.edges.items():
            merged = set(succ.get(src, ())) | set(dsts)
            succ[src] = tuple(sorted(merged))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", succ)
        object.__setattr__(self, "successful_topo", tuple(tuple(o) for o in self.successful_topo))
        object.__setattr__(self, "applications", dict(self.applications))

    @classmethod
    def from_edges(cls, nodes: Iterable[str], edges: Iterable[tuple[str, str]], **kw) -> TaskGraph:
        adj: dict[str, set[str]] = {}
        for u, v in edges:
            adj.setdefault(u, set()).add(v)
        return cls(tuple(nodes), {u: tuple(vs) for u, vs in adj.items()}, **kw)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TaskGraph):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.edge_set() == other.edge_set()
            and self.intent == other.intent
            and self.instruction == other.instruction
            and self.successful_topo == other.successful_topo
            and dict(self.applications) == dict(other.applications)
        )

    __hash__ = None  # type: ignore[assignment]

    def edge_set(self) -> frozenset[tuple[str, str]]:
        return frozenset((u, v) for u, vs in self.edges.items() for v in vs)

    def edge_list(self) -> list[tuple[str, str]]:
        return sorted(self.edge_set())

    @cached_property
    def predecessors(self) -> dict[str, tuple[str, ...]]:
        preds: dict[str, list[str]] = {n: [] for n in self.nodes}
        for u, v in self.edge_list():
            preds.setdefault(v, []).append(u)
        return {n: tuple(sorted(p)) for n, p in preds.items()}

    def successors(self, node: str) -> tuple[str, ...]:
        return self.edges.get(node, ())

    def roots(self) -> list[str]:
        return [n for n in self.nodes if not self.predecessors.get(n)]

    def replace(self, **changes) -> TaskGraph:
        values = {
            "nodes": self.nodes,
            "edges": self.edges,
            "intent": self.intent,
            "instruction": self.instruction,
            "successful_topo": self.successful_topo,
            "applications": self.applications,
        }
        values.update(changes)
        return TaskGraph(**values)


def find_cycle(graph: TaskGraph) -> list[str] | None:
    """Return one directed cycle as a closed path, or None."""
    color: dict[str, int] = {}
    for start in graph.nodes:
        if color.get(start):
            continue
        stack: list[tuple[str, Iterator[str]]] = [(start, iter(graph.successors(start)))]
        path = [start]
        color[start] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
                path.pop()
                continue
            state = color.get(nxt, 0)
            if state == 1:
                return path[path.index(nxt):] + [nxt]
            if state == 0:
                color[nxt] = 1
                path.append(nxt)
                stack.append((nxt, iter(graph.successors(nxt))))
    return None


def is_topological_order(graph: TaskGraph, order: Sequence[str]) -> bool:
    if sorted(order) != list(graph.nodes):
        return False
    pos = {n: i for i, n in enumerate(order)}
    return all(pos[u] < pos[v] for u, v in graph.edge_set())


def _structure_problems(graph: TaskGraph) -> list[str]:
    report: list[str] = []
    members = set(graph.nodes)
    unknown_found = False
    for u, v in graph.edge_list():
        for end in (u, v):
            if end not in members:
                report.append(f"unknown node {end!r} in edge {u} -> {v}")
                unknown_found = True
        if u == v:
            report.append(f"self-loop on {u!r}")
    if unknown_found:
        return report
    cycle = find_cycle(graph)
    if cycle is not None:
        report.append("cycle: " + " -> ".join(cycle))
    return report


def validate_graph(graph: TaskGraph) -> list[str]:
    """List every violated TaskGraph invariant; empty when well-formed."""
    report = _structure_problems(graph)
    if report:
        return report
    for i, order in enumerate(graph.successful_topo):
        if not is_topological_order(graph, order):
            report.append(f"successful_topo[{i}] is not a topological order")
    return report


def _require_dag(graph: TaskGraph) -> None:
    problems = _structure_problems(graph)
    if problems:
        raise GraphError("; ".join(problems))


def topological_sort(graph: TaskGraph) -> list[str]:
    """Kahn's algorithm, smallest id first among ready nodes."""
    _require_dag(graph)
    indeg = {n: len(graph.predecessors[n]) for n in graph.nodes}
    ready = [n for n, d in indeg.items() if d == 0]
    heapify(ready)
    order = []
    while ready:
        n = heappop(ready)
        order.append(n)
        for m in graph.successors(n):
            indeg[m] -= 1
            if indeg[m] == 0:
                heappush(ready, m)
    if len(order) != len(graph.nodes):
        raise CycleError(find_cycle(graph) or [])
    return order


def depths(graph: TaskGraph) -> dict[str, int]:
    """Depth of every node: roots are 1, others 1 + deepest predecessor."""
    out: dict[str, int] = {}
    for n in topological_sort(graph):
        out[n] = 1 + max((out[p] for p in graph.predecessors[n]), default=0)
    return out


def node_depth(graph: TaskGraph, node: str) -> int:
    if node not in graph.predecessors:
        raise GraphError(f"unknown node {node!r}")
    return depths(graph)[node]


def graph_depth(graph: TaskGraph) -> int:
    return max(depths(graph).values(), default=0)


def levels(graph: TaskGraph) -> list[list[str]]:
    """Nodes grouped by depth, level 1 first, ids sorted within a level."""
    d = depths(graph)
    out: list[list[str]] = [[] for _ in range(max(d.values(), default=0))]
    for n in graph.nodes:
        out[d[n] - 1].append(n)
    return out


def graph_width(graph: TaskGraph) -> int:
    """Largest number of nodes sharing one depth value."""
    if not graph.nodes:
        raise GraphError("width of an empty graph is undefined")
    return max(len(level) for level in levels(graph))


def all_topological_orders(graph: TaskGraph, cap: int = ENUMERATION_CAP) -> list[list[str]]:
    """Every linear extension exactly once, in lexicographic order of ids."""
    if len(graph.nodes) > cap:
        raise GraphError(f"{len(graph.nodes)} nodes exceeds the enumeration cap of {cap}")
    _require_dag(graph)
    return list(iter_topological_orders(graph))


def iter_topological_orders(graph: TaskGraph) -> Iterator[list[str]]:
    indeg = {n: len(graph.predecessors[n]) for n in graph.nodes}
    order: list[str] = []
    n_total = len(graph.nodes)

    def extend() -> Iterator[list[str]]:
        if len(order) == n_total:
            yield list(order)
            return
        for n in graph.nodes:
            if indeg[n] != 0:
                continue
            indeg[n] = -1
            for m in graph.successors(n):
                indeg[m] -= 1
            order.append(n)
            yield from extend()
            order.pop()
            for m in graph.successors(n):
                indeg[m] += 1
            indeg[n] = 0

    yield from extend()


def count_linear_extensions(graph: TaskGraph) -> int:
    """Number of topological orders, by DP over down-closed subsets."""
    index = {n: i for i, n in enumerate(graph.nodes)}
    pred_mask = [0] * len(graph.nodes)
    for u, v in graph.edge_set():
        pred_mask[index[v]] |= 1 << index[u]
    counts = {0: 1}
    full = (1 << len(graph.nodes)) - 1
    frontier = {0}
    while frontier:
        nxt: set[int] = set()
        for mask in frontier:
            c = counts[mask]
            for i in range(len(graph.nodes)):
                bit = 1 << i
                if not mask & bit and pred_mask[i] & mask == pred_mask[i]:
                    m2 = mask | bit
                    counts[m2] = counts.get(m2, 0) + c
                    nxt.add(m2)
        frontier = nxt
    return counts.get(full, 0)
