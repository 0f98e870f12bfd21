"""Reading and writing dataset bundles.

Bundle directory layout::

    subtasks/<id>.json           subtask metadata
    tasks/<task_id>.json         task metadata (task id is the file stem)
    trajectories/<id>.json       subtask or task trajectories
    evals/<subtask_id>.json      evaluation function: list of {api, args, message}
    registry.json                optional {category: [application, ...]}
    environment.json             optional environment resources and initial facts
    bundle.json                  manifest of written files (informational)
"""

from __future__ import annotations

import json
import warnings
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .apps import AppCategoryRegistry
from .env import Action, ActionError, EvalFunction, EventLog, MalformedFunctionError
from .model import Subtask, TaskGraph, validate_graph


class SchemaError(ValueError):
    def __init__(self, path: Path | str, message: str) -> None:
        self.path = str(path)
        super().__init__(f"{path}: {message}")


class DanglingReferenceError(SchemaError):
    pass


class SchemaWarning(UserWarning):
    pass


SUBTASK_KEYS = ("id", "instruction_template", "application", "available_parameters", "OS", "input_resources", "output_resources")
TASK_KEYS = ("task_instruction", "dag", "task_intent", "successful_topo")
SUBTASK_TRAJ_KEYS = ("trajectory_id", "instruction", "observations", "actions", "subtask_id")
TASK_TRAJ_KEYS = ("trajectory_id", "task_id", "topological_order", "instruction", "intent", "observations", "actions")
ACTION_REQUIRED = ("function", "args")
ACTION_OPTIONAL = ("rect", "description", "thought", "control_text", "effects")
FACT_KEYS = ("files", "screen_text", "control_text", "clipboard", "window_titles")


def dumps(obj: Any) -> str:
    """Canonical JSON text: sorted keys, 2-space indent, UTF-8, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path: Path, obj: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj), encoding="utf-8")


def read_json(path: Path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(path, f"invalid JSON ({exc})") from exc


def _check_keys(path: Path, data: Any, required: tuple[str, ...], optional: tuple[str, ...] = ()) -> None:
    if not isinstance(data, dict):
        raise SchemaError(path, "expected a JSON object")
    for key in required:
        if key not in data:
            raise SchemaError(path, f"missing required field {key!r}")
    for key in sorted(set(data) - set(required) - set(optional)):
        warnings.warn(f"{path}: unknown field {key!r} ignored", SchemaWarning, stacklevel=3)


# -- records ------------------------------------------------------------------


def subtask_to_dict(s: Subtask) -> dict[str, Any]:
    return {
        "id": s.id,
        "instruction_template": s.instruction_template,
        "application": s.application,
        "available_parameters": [dict(p) for p in s.available_parameters],
        "OS": s.os,
        "input_resources": list(s.input_resources),
        "output_resources": list(s.output_resources),
    }


def subtask_from_dict(data: Any, path: Path | str = "<subtask>") -> Subtask:
    _check_keys(Path(path), data, SUBTASK_KEYS)
    s = Subtask(
        id=data["id"],
        instruction_template=data["instruction_template"],
        application=data["application"],
        available_parameters=tuple(data["available_parameters"]),
        os=data["OS"],
        input_resources=tuple(data["input_resources"]),
        output_resources=tuple(data["output_resources"]),
    )
    problems = s.problems()
    if problems:
        raise SchemaError(path, "; ".join(problems))
    return s


def task_to_dict(g: TaskGraph) -> dict[str, Any]:
    return {
        "task_instruction": g.instruction,
        "dag": {"nodes": list(g.nodes), "edges": {n: list(g.successors(n)) for n in g.nodes}},
        "task_intent": g.intent,
        "successful_topo": [list(o) for o in g.successful_topo],
    }


def task_from_dict(data: Any, path: Path | str = "<task>") -> TaskGraph:
    path = Path(path)
    _check_keys(path, data, TASK_KEYS)
    dag = data["dag"]
    _check_keys(path, dag, ("nodes", "edges"))
    if not isinstance(dag["edges"], dict):
        raise SchemaError(path, "field 'dag.edges' must map node ids to successor lists")
    graph = TaskGraph(
        nodes=tuple(dag["nodes"]),
        edges={k: tuple(v) for k, v in dag["edges"].items()},
        intent=data["task_intent"],
        instruction=data["task_instruction"],
        successful_topo=tuple(tuple(o) for o in data["successful_topo"]),
    )
    problems = validate_graph(graph)
    if problems:
        raise SchemaError(path, "field 'dag': " + "; ".join(problems))
    return graph


def action_to_dict(a: Action) -> dict[str, Any]:
    out: dict[str, Any] = {"function": a.kind, "args": dict(a.args)}
    if a.rect is not None:
        out["rect"] = list(a.rect)
    for key in ("description", "thought", "control_text"):
        value = getattr(a, key)
        if value is not None:
            out[key] = value
    if a.effects:
        out["effects"] = {k: list(v) if isinstance(v, tuple) else v for k, v in a.effects.items()}
    return out


def action_from_dict(data: Any, path: Path | str = "<action>") -> Action:
    _check_keys(Path(path), data, ACTION_REQUIRED, ACTION_OPTIONAL)
    try:
        return Action(
            kind=data["function"],
            args=data["args"],
            rect=tuple(data["rect"]) if data.get("rect") is not None else None,
            control_text=data.get("control_text"),
            description=data.get("description"),
            thought=data.get("thought"),
            effects=data.get("effects", {}),
        )
    except ActionError as exc:
        raise SchemaError(path, str(exc)) from exc


@dataclass(frozen=True)
class SubtaskTrajectory:
    trajectory_id: str
    instruction: str
    observations: tuple[str, ...]
    actions: tuple[Action, ...]
    subtask_id: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "trajectory_id": self.trajectory_id,
            "instruction": self.instruction,
            "observations": list(self.observations),
            "actions": [action_to_dict(a) for a in self.actions],
            "subtask_id": self.subtask_id,
        }


@dataclass(frozen=True)
class TaskTrajectory:
    trajectory_id: str
    task_id: str
    topological_order: tuple[str, ...]
    instruction: str
    intent: str
    observations: tuple[str, ...]
    actions: tuple[Action, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "trajectory_id": self.trajectory_id,
            "task_id": self.task_id,
            "topological_order": list(self.topological_order),
            "instruction": self.instruction,
            "intent": self.intent,
            "observations": list(self.observations),
            "actions": [action_to_dict(a) for a in self.actions],
        }


def trajectory_from_dict(data: Any, path: Path | str = "<trajectory>") -> SubtaskTrajectory | TaskTrajectory:
    path = Path(path)
    if isinstance(data, dict) and "task_id" in data:
        _check_keys(path, data, TASK_TRAJ_KEYS)
        return TaskTrajectory(
            trajectory_id=str(data["trajectory_id"]),
            task_id=str(data["task_id"]),
            topological_order=tuple(data["topological_order"]),
            instruction=data["instruction"],
            intent=data["intent"],
            observations=tuple(data["observations"]),
            actions=tuple(action_from_dict(a, path) for a in data["actions"]),
        )
    _check_keys(path, data, SUBTASK_TRAJ_KEYS)
    return SubtaskTrajectory(
        trajectory_id=str(data["trajectory_id"]),
        instruction=data["instruction"],
        observations=tuple(data["observations"]),
        actions=tuple(action_from_dict(a, path) for a in data["actions"]),
        subtask_id=str(data["subtask_id"]),
    )


def eval_function_from_json(data: Any, path: Path | str = "<eval>") -> EvalFunction:
    try:
        return EvalFunction.from_list(data)
    except MalformedFunctionError as exc:
        raise SchemaError(path, str(exc)) from exc


@dataclass(frozen=True)
class Environment:
    """Resource categories that exist before any subtask runs, plus initial facts."""

    resources: tuple[str, ...] = ()
    facts: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        facts = {k: v if k == "clipboard" else sorted(v) for k, v in self.facts.items()}
        object.__setattr__(self, "resources", tuple(sorted(set(self.resources))))
        object.__setattr__(self, "facts", facts)

    def new_log(self) -> EventLog:
        f = self.facts
        return EventLog(
            files=f.get("files", ()),
            screen_text=f.get("screen_text", ()),
            control_text=f.get("control_text", ()),
            clipboard=f.get("clipboard"),
            window_titles=f.get("window_titles", ()),
        )

    def to_dict(self) -> dict[str, Any]:
        return {"resources": sorted(self.resources), "facts": dict(self.facts)}

    @classmethod
    def from_dict(cls, data: Any, path: Path | str = "<environment>") -> Environment:
        _check_keys(Path(path), data, ("resources",), ("facts",))
        facts = data.get("facts", {})
        unknown = set(facts) - set(FACT_KEYS)
        if unknown:
            raise SchemaError(path, f"unknown fact keys {sorted(unknown)}")
        return cls(tuple(sorted(data["resources"])), facts)


# -- bundles ------------------------------------------------------------------


@dataclass
class DatasetBundle:
    subtasks: dict[str, Subtask] = field(default_factory=dict)
    tasks: dict[str, TaskGraph] = field(default_factory=dict)
    subtask_trajectories: dict[str, SubtaskTrajectory] = field(default_factory=dict)
    task_trajectories: dict[str, TaskTrajectory] = field(default_factory=dict)
    eval_functions: dict[str, EvalFunction] = field(default_factory=dict)
    registry: AppCategoryRegistry | None = None
    environment: Environment | None = None

    def is_empty(self) -> bool:
        return not (
            self.subtasks or self.tasks or self.subtask_trajectories or self.task_trajectories or self.eval_functions
        )

    def link(self) -> None:
        """Resolve cross-file references and attach applications to task nodes."""
        for task_id, task in self.tasks.items():
            for n in task.nodes:
                if n not in self.subtasks:
                    raise DanglingReferenceError(f"tasks/{task_id}.json", f"node {n!r} has no subtask subtasks/{n}.json")
            self.tasks[task_id] = task.replace(applications={n: self.subtasks[n].application for n in task.nodes})
        for tid, traj in self.subtask_trajectories.items():
            if traj.subtask_id not in self.subtasks:
                raise DanglingReferenceError(f"trajectories/{tid}.json", f"subtask_id {traj.subtask_id!r} not found in subtasks/")
        for tid, traj in self.task_trajectories.items():
            if traj.task_id not in self.tasks:
                raise DanglingReferenceError(f"trajectories/{tid}.json", f"task_id {traj.task_id!r} not found in tasks/")
        for sid in self.eval_functions:
            if sid not in self.subtasks:
                raise DanglingReferenceError(f"evals/{sid}.json", f"subtask {sid!r} not found in subtasks/")

    def app_registry(self) -> AppCategoryRegistry:
        return self.registry or AppCategoryRegistry.default()

    def trajectory_for_subtask(self, subtask_id: str) -> SubtaskTrajectory | None:
        for tid in sorted(self.subtask_trajectories):
            if self.subtask_trajectories[tid].subtask_id == subtask_id:
                return self.subtask_trajectories[tid]
        return None


def _json_files(directory: Path) -> list[Path]:
    return sorted(directory.glob("*.json")) if directory.is_dir() else []


def load_bundle(root: str | Path) -> DatasetBundle:
    root = Path(root)
    if not root.is_dir():
        raise SchemaError(root, "bundle directory does not exist")
    b = DatasetBundle()
    for path in _json_files(root / "subtasks"):
        data = read_json(path)
        for item in data if isinstance(data, list) else [data]:
            s = subtask_from_dict(item, path)
            if s.id in b.subtasks:
                raise SchemaError(path, f"duplicate subtask id {s.id!r}")
            b.subtasks[s.id] = s
    for path in _json_files(root / "tasks"):
        b.tasks[path.stem] = task_from_dict(read_json(path), path)
    for path in _json_files(root / "trajectories"):
        traj = trajectory_from_dict(read_json(path), path)
        target = b.task_trajectories if isinstance(traj, TaskTrajectory) else b.subtask_trajectories
        if traj.trajectory_id in target:
            raise SchemaError(path, f"duplicate trajectory id {traj.trajectory_id!r}")
        target[traj.trajectory_id] = traj
    for path in _json_files(root / "evals"):
        b.eval_functions[path.stem] = eval_function_from_json(read_json(path), path)
    if (root / "registry.json").is_file():
        b.registry = AppCategoryRegistry.load(root / "registry.json")
    if (root / "environment.json").is_file():
        b.environment = Environment.from_dict(read_json(root / "environment.json"), root / "environment.json")
    b.link()
    return b


def _safe_stem(name: str) -> str:
    if not name or "/" in name or "\\" in name or name in (".", ".."):
        raise ValueError(f"identifier {name!r} cannot be used as a file name")
    return name


def save_bundle(bundle: DatasetBundle, root: str | Path) -> list[Path]:
    """Write ``bundle`` under ``root`` and return the written files (manifest last)."""
    root = Path(root)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot write bundle to {root}: {exc}") from exc
    written: list[Path] = []

    def put(rel: str, obj: Any) -> None:
        path = root / rel
        write_json(path, obj)
        written.append(path)

    for sid in sorted(bundle.subtasks):
        put(f"subtasks/{_safe_stem(sid)}.json", subtask_to_dict(bundle.subtasks[sid]))
    for tid in sorted(bundle.tasks):
        put(f"tasks/{_safe_stem(tid)}.json", task_to_dict(bundle.tasks[tid]))
    for tid in sorted(bundle.subtask_trajectories):
        put(f"trajectories/{_safe_stem(tid)}.json", bundle.subtask_trajectories[tid].to_dict())
    for tid in sorted(bundle.task_trajectories):
        if tid in bundle.subtask_trajectories:
            raise ValueError(f"trajectory id {tid!r} is used by both a subtask and a task trajectory")
        put(f"trajectories/{_safe_stem(tid)}.json", bundle.task_trajectories[tid].to_dict())
    for sid in sorted(bundle.eval_functions):
        put(f"evals/{_safe_stem(sid)}.json", bundle.eval_functions[sid].to_list())
    if bundle.registry is not None:
        put("registry.json", {k: sorted(v) for k, v in bundle.registry.groups().items()})
    if bundle.environment is not None:
        put("environment.json", bundle.environment.to_dict())
    manifest = sorted(str(p.relative_to(root)) for p in written)
    put("bundle.json", {"files": manifest})
    return written
