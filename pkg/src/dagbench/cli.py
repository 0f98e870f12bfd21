"""Command-line entry point: ``dagbench <command> ...``.

Exit codes: 0 ok, 1 unexpected error, 2 usage error, 3 bad input data,
4 graph or composition error, 5 verification exhausted, 6 malformed
evaluation function or synthesizer output.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from collections.abc import Sequence
from pathlib import Path

from . import __version__
from .complexity import DIMENSIONS, ComplexityConfig, Level, build_capability_suite, capability_tags, classify
from .composer import (
    CompositionConstraint,
    CompositionError,
    SubtaskPool,
    compose,
    group_by_resource_chains,
)
from .env import MalformedFunctionError
from .evaluator import BatchRow, EvaluationRun
from .harness import (
    ScriptedAgent,
    SynthesisError,
    TableEvalSynthesizer,
    TableTrajectorySynthesizer,
    cross_verify,
    reference_actions,
    run_task,
    script_for,
)
from .io import (
    DatasetBundle,
    SchemaError,
    TaskTrajectory,
    dumps,
    load_bundle,
    read_json,
    save_bundle,
    task_from_dict,
    trajectory_from_dict,
)
from .model import GraphError

EXIT_DATA = 3
EXIT_GRAPH = 4
EXIT_UNVERIFIED = 5
EXIT_MALFORMED = 6


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _config(args) -> ComplexityConfig:
    return ComplexityConfig.load(args.config) if getattr(args, "config", None) else ComplexityConfig.load()


def level_pair(item: str) -> tuple[str, Level]:
    """argparse type for ``DIMENSION=LEVEL``."""
    dim, sep, value = item.partition("=")
    dim = dim.strip()
    if not sep or dim not in DIMENSIONS:
        raise argparse.ArgumentTypeError(f"expected DIMENSION=LEVEL with a known dimension, got {item!r}")
    try:
        return dim, Level.parse(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def cmd_compose(args) -> int:
    src = load_bundle(args.pool)
    pool = SubtaskPool(src.subtasks.values())
    env = src.environment.resources if src.environment else ()
    constraint = CompositionConstraint(
        levels=dict(args.level or ()),
        min_nodes=args.min_nodes,
        max_nodes=args.max_nodes,
        seed=args.seed,
        budget=args.budget,
    )
    out = DatasetBundle(
        subtasks=dict(src.subtasks),
        eval_functions=dict(src.eval_functions),
        registry=src.registry,
        environment=src.environment,
    )
    for i, group in enumerate(group_by_resource_chains(pool, env)):
        try:
            graph = compose(pool, group, constraint, src.app_registry(), env, _config(args))
        except CompositionError as exc:
            print(f"skipped group {i}: {exc}", file=sys.stderr)
            continue
        out.tasks[f"task-{i:04d}"] = graph
    for path in save_bundle(out, args.out):
        if path.parent.name == "tasks":
            print(path)
    if not out.tasks:
        print("no task satisfied the constraint", file=sys.stderr)
        return EXIT_GRAPH
    return 0


def cmd_classify(args) -> int:
    bundle = load_bundle(args.bundle)
    config = _config(args)
    ids = args.task or sorted(bundle.tasks)
    columns = ["task_id"]
    for dim in DIMENSIONS:
        columns += [dim, f"{dim}_level"]
    columns.append("capabilities")
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(columns)
    for tid in ids:
        if tid not in bundle.tasks:
            raise SchemaError(args.bundle, f"unknown task {tid!r}")
        profile = classify(bundle.tasks[tid], bundle.app_registry(), config=config)
        row = profile.as_row()
        writer.writerow([tid] + [row[c] for c in columns[1:-1]] + [";".join(capability_tags(profile, config.capabilities))])
    return 0


def cmd_suite(args) -> int:
    bundle = load_bundle(args.bundle)
    config = _config(args)
    spec = config.capability(args.capability)
    ids = sorted(bundle.tasks)
    chosen = build_capability_suite([bundle.tasks[t] for t in ids], spec, bundle.app_registry(), config)
    chosen_ids = {id(g) for g in chosen}
    for tid in ids:
        if id(bundle.tasks[tid]) in chosen_ids:
            print(Path(args.bundle) / "tasks" / f"{tid}.json")
    return 0


def _bindings(bundle: DatasetBundle, graph) -> dict:
    missing = [n for n in graph.nodes if n not in bundle.eval_functions]
    if missing:
        raise SchemaError("evals/", f"no evaluation function for {', '.join(missing)}")
    return {n: bundle.eval_functions[n] for n in graph.nodes}


def cmd_evaluate(args) -> int:
    bundle = load_bundle(args.bundle)
    if args.task not in bundle.tasks:
        raise SchemaError(args.bundle, f"unknown task {args.task!r}")
    graph = bundle.tasks[args.task]
    traj = trajectory_from_dict(read_json(Path(args.trajectory)), args.trajectory)
    if not isinstance(traj, TaskTrajectory):
        raise SchemaError(args.trajectory, "expected a task trajectory (with 'task_id')")
    bindings = _bindings(bundle, graph)
    log = bundle.environment.new_log() if bundle.environment else None
    run = EvaluationRun(graph, bindings, args.max_steps, log)
    for action in traj.actions:
        if run.terminated:
            break
        run.step(action)
    if not run.terminated:
        run.fail("trajectory ended before the task was completed")
    scripts = {n: script_for(bindings[n]) for n in graph.nodes}
    report = run.report(predicted=traj.actions, reference=reference_actions(graph, scripts))
    _emit(dumps(report.to_dict()), args.out)
    return 0


def _agent_from(spec: dict) -> ScriptedAgent:
    return ScriptedAgent(
        policy=spec.get("policy", "perfect"),
        order=spec.get("order"),
        p_fail=float(spec.get("p_fail", 0.0)),
        seed=int(spec.get("seed", 0)),
    )


def run_manifest(manifest_path: Path) -> list[BatchRow]:
    manifest = read_json(manifest_path)
    if not isinstance(manifest, dict) or "bundle" not in manifest:
        raise SchemaError(manifest_path, "missing required field 'bundle'")
    base = manifest_path.parent
    bundle = load_bundle(base / manifest["bundle"])
    agent = _agent_from(manifest.get("agent", {}))
    if "seed" in manifest:
        agent = ScriptedAgent(agent.policy, agent.order, agent.p_fail, int(manifest["seed"]))
    max_steps = int(manifest.get("max_steps", 15))
    if "tasks" in manifest:
        tasks = []
        for rel in manifest["tasks"]:
            path = base / rel
            graph = task_from_dict(read_json(path), path)
            missing = [n for n in graph.nodes if n not in bundle.subtasks]
            if missing:
                raise SchemaError(path, f"nodes {missing} have no subtask in the bundle")
            tasks.append((path.stem, graph.replace(applications={n: bundle.subtasks[n].application for n in graph.nodes})))
    else:
        tasks = sorted(bundle.tasks.items())
    fixture = bundle.environment.new_log if bundle.environment else None
    rows = []
    for tid, graph in tasks:
        report = run_task(agent, graph, _bindings(bundle, graph), None, max_steps, fixture)
        tags = capability_tags(classify(graph, bundle.app_registry()))
        rows.append(BatchRow(tid, tags, report))
    return rows


def write_results_csv(rows: Sequence[BatchRow], out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(BatchRow.CSV_COLUMNS)
    for r in rows:
        writer.writerow(r.as_csv_row())


def cmd_simulate(args) -> int:
    rows = run_manifest(Path(args.manifest))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_results_csv(rows, fh)
    else:
        write_results_csv(rows, sys.stdout)
    if args.figures and rows:
        from .plotting import plot_batch_metrics

        path = plot_batch_metrics(rows, Path(args.figures) / "batch_metrics.png")
        print(f"wrote {path}", file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    bundle = load_bundle(args.bundle)
    if args.subtask not in bundle.subtasks:
        raise SchemaError(args.bundle, f"unknown subtask {args.subtask!r}")
    subtask = bundle.subtasks[args.subtask]
    if subtask.id not in bundle.eval_functions:
        raise SchemaError("evals/", f"no evaluation function for {subtask.id}")
    fn = bundle.eval_functions[subtask.id]
    traj = bundle.trajectory_for_subtask(subtask.id)
    actions = traj.actions if traj is not None else tuple(script_for(fn))
    fixture = bundle.environment.new_log if bundle.environment else None
    outcome = cross_verify(
        TableTrajectorySynthesizer({subtask.id: actions}),
        TableEvalSynthesizer({subtask.id: fn}, repair=False),
        subtask,
        args.max_iters,
        fixture,
    )
    _emit(dumps(outcome.to_dict()), args.out)
    return 0 if outcome.verified else EXIT_UNVERIFIED


def bundle_stats(bundle: DatasetBundle) -> list[tuple[str, str]]:
    registry = bundle.app_registry()
    tasks = list(bundle.tasks.values())
    words = [len(t.instruction.split()) for t in tasks]
    scenarios = {" + ".join(sorted({registry.category_of(a) for a in t.applications.values()})) for t in tasks}
    apps = {s.application for s in bundle.subtasks.values()}
    rows = [
        ("Total Tasks", str(len(tasks))),
        ("Avg. Words of Instruction", f"{sum(words) / len(words):.1f}" if words else "0.0"),
        ("Total Task Scenarios", str(len(scenarios))),
        ("Total Subtasks", str(len(bundle.subtasks))),
        ("Total Applications", str(len(apps))),
        ("Avg. Nodes per Task", f"{sum(len(t.nodes) for t in tasks) / len(tasks):.2f}" if tasks else "0.00"),
        ("Avg. Edges per Task", f"{sum(len(t.edge_set()) for t in tasks) / len(tasks):.2f}" if tasks else "0.00"),
        ("Subtask Trajectories", str(len(bundle.subtask_trajectories))),
        ("Task Trajectories", str(len(bundle.task_trajectories))),
    ]
    return rows


def cmd_stats(args) -> int:
    bundle = load_bundle(args.bundle)
    for key, value in bundle_stats(bundle):
        print(f"{key}: {value}")
    if args.figures and bundle.tasks:
        from .plotting import plot_complexity_distribution

        profiles = [classify(t, bundle.app_registry()) for t in bundle.tasks.values()]
        path = plot_complexity_distribution(profiles, Path(args.figures) / "complexity_distribution.png")
        print(f"wrote {path}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dagbench", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compose", help="compose tasks from a subtask pool")
    p.add_argument("pool", help="bundle directory holding subtasks/ (and environment.json)")
    p.add_argument("--out", required=True, help="output bundle directory")
    p.add_argument("--level", action="append", type=level_pair, metavar="DIM=LEVEL", help="e.g. dependency=Hard (repeatable)")
    p.add_argument("--min-nodes", type=int, default=1)
    p.add_argument("--max-nodes", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--config", help="complexity thresholds / capability table JSON")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("classify", help="complexity profile table (CSV)")
    p.add_argument("bundle")
    p.add_argument("--task", action="append", help="restrict to task id (repeatable)")
    p.add_argument("--config")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("suite", help="list task files belonging to a capability suite")
    p.add_argument("bundle")
    p.add_argument("--capability", required=True, help="e.g. long-range-planning")
    p.add_argument("--config")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("evaluate", help="score a task trajectory")
    p.add_argument("bundle")
    p.add_argument("--task", required=True)
    p.add_argument("--trajectory", required=True)
    p.add_argument("--max-steps", type=int, default=15)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="run scripted agents over a batch manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="results CSV path (default stdout)")
    p.add_argument("--figures", help="directory for metric figures")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="cross-verify a subtask's trajectory and evaluation function")
    p.add_argument("bundle")
    p.add_argument("--subtask", required=True)
    p.add_argument("--max-iters", type=int, default=3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("stats", help="bundle statistics")
    p.add_argument("bundle")
    p.add_argument("--figures", help="directory for the complexity distribution figure")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (GraphError, CompositionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GRAPH
    except (MalformedFunctionError, SynthesisError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
