"""Seeded synthetic subtask pools and task corpora for tests and demos."""

from __future__ import annotations

import random
from collections.abc import Sequence
from dataclasses import dataclass

from .apps import AppCategoryRegistry
from .env import Check, EvalFunction
from .model import Subtask, TaskGraph


def random_dag(rng: random.Random, n: int, p: float, prefix: str = "n") -> TaskGraph:
    """Random DAG on ``n`` nodes: each forward pair of a hidden order gets an edge with probability ``p``."""
    ids = [f"{prefix}{i:02d}" for i in range(n)]
    hidden = ids[:]
    rng.shuffle(hidden)
    edges = [(hidden[i], hidden[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return TaskGraph.from_edges(ids, edges)


def uuid_like(rng: random.Random) -> str:
    h = f"{rng.getrandbits(128):032x}"
    return f"{h[:8]}-{h[8:12]}-{h[12:16]}-{h[16:20]}-{h[20:]}"


@dataclass(frozen=True)
class SyntheticTask:
    graph: TaskGraph
    subtasks: tuple[Subtask, ...]
    functions: dict[str, EvalFunction]


def subtasks_for(
    graph: TaskGraph,
    rng: random.Random,
    apps: Sequence[str] | None = None,
    registry: AppCategoryRegistry | None = None,
) -> SyntheticTask:
    """Give every node a subtask whose resources reproduce exactly the graph's edges.

    Each edge ``u -> v`` gets its own resource category produced by ``u`` and
    consumed by ``v``; roots consume nothing.
    """
    if apps is None:
        apps = sorted((registry or AppCategoryRegistry.default()).categories)
    inputs: dict[str, list[str]] = {n: [] for n in graph.nodes}
    outputs: dict[str, list[str]] = {n: [] for n in graph.nodes}
    for u, v in graph.edge_list():
        cat = f"res_{u}_{v}"
        outputs[u].append(cat)
        inputs[v].append(cat)
    subtasks = []
    functions = {}
    for n in graph.nodes:
        app = rng.choice(list(apps))
        target = f"item {n}"
        subtasks.append(
            Subtask(
                id=n,
                instruction_template=f"In {app}, open '{{target}}' and finish step {n}.",
                application=app,
                available_parameters=({"target": target},),
                input_resources=tuple(inputs[n]),
                output_resources=tuple(outputs[n]),
            )
        )
        checks = [Check("check_mouse_clicks", {"text": f"Open {target}"})]
        extra = rng.randrange(3)
        if extra >= 1:
            checks.append(Check("check_keyboard_types", {"text": f"notes for {n}"}))
        if extra >= 2:
            checks.append(Check("check_file_exists", {"file_path": f"C:/work/{n}.txt"}))
        functions[n] = EvalFunction(tuple(checks))
    applications = {s.id: s.application for s in subtasks}
    return SyntheticTask(graph.replace(applications=applications), tuple(subtasks), functions)


def random_task(
    rng: random.Random,
    n_range: tuple[int, int] = (1, 8),
    p_range: tuple[float, float] = (0.1, 0.7),
    apps: Sequence[str] | None = None,
) -> SyntheticTask:
    n = rng.randint(*n_range)
    graph = random_dag(rng, n, rng.uniform(*p_range))
    return subtasks_for(graph, rng, apps)
