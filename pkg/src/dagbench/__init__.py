"""Graph-structured agent tasks: composition, complexity, simulated evaluation."""

from .apps import AppCategoryRegistry
from .complexity import CapabilitySpec, ComplexityProfile, Level, build_capability_suite, classify, matches_capability
from .composer import CompositionConstraint, IntentGroup, SubtaskPool, compose, render_instruction, wire_edges
from .env import Action, Check, EvalFunction, EvalResult, EventLog, run_eval_function
from .evaluator import EvaluationRun, MetricsReport, coverage_rate, logical_consistency, max_coherency, sensitivity
from .harness import ScriptedAgent, cross_verify, discriminative_check, run_task
from .io import DatasetBundle, load_bundle, save_bundle
from .model import Resource, Subtask, TaskGraph, all_topological_orders, graph_width, node_depth, validate_graph

__version__ = "0.1.0"

__all__ = [
    "Action",
    "AppCategoryRegistry",
    "CapabilitySpec",
    "Check",
    "ComplexityProfile",
    "CompositionConstraint",
    "DatasetBundle",
    "EvalFunction",
    "EvalResult",
    "EvaluationRun",
    "EventLog",
    "IntentGroup",
    "Level",
    "MetricsReport",
    "Resource",
    "ScriptedAgent",
    "Subtask",
    "SubtaskPool",
    "TaskGraph",
    "all_topological_orders",
    "build_capability_suite",
    "classify",
    "compose",
    "coverage_rate",
    "cross_verify",
    "discriminative_check",
    "graph_width",
    "load_bundle",
    "logical_consistency",
    "matches_capability",
    "max_coherency",
    "node_depth",
    "render_instruction",
    "run_eval_function",
    "run_task",
    "save_bundle",
    "sensitivity",
    "validate_graph",
    "wire_edges",
]
