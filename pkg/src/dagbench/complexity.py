"""Five-dimensional task complexity and capability test-suite selection."""

from __future__ import annotations

import enum
import json
import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .apps import AppCategoryRegistry
from .model import TaskGraph, graph_depth, graph_width

DIMENSIONS = ("dependency", "instruction", "knowledge", "hierarchy", "branch")


class Level(str, enum.Enum):
    EASY = "Easy"
    MEDIUM = "Medium"
    HARD = "Hard"

    @classmethod
    def parse(cls, value: str | Level) -> Level:
        if isinstance(value, Level):
            return value
        for level in cls:
            if level.value.lower() == str(value).strip().lower():
                return level
        raise ValueError(f"unknown level {value!r}")


STAR_LEVELS = {1: Level.EASY, 2: Level.MEDIUM, 3: Level.HARD}


@dataclass(frozen=True)
class Threshold:
    easy_max: int
    medium_max: int

    def level(self, count: int) -> Level:
        if count <= self.easy_max:
            return Level.EASY
        if count <= self.medium_max:
            return Level.MEDIUM
        return Level.HARD


@dataclass(frozen=True)
class DimensionScore:
    count: int
    level: Level


@dataclass(frozen=True)
class ComplexityProfile:
    dependency: DimensionScore
    instruction: DimensionScore
    knowledge: DimensionScore
    hierarchy: DimensionScore
    branch: DimensionScore

    def level(self, dimension: str) -> Level:
        return getattr(self, dimension).level

    def count(self, dimension: str) -> int:
        return getattr(self, dimension).count

    def as_row(self) -> dict[str, object]:
        row: dict[str, object] = {}
        for dim in DIMENSIONS:
            score = getattr(self, dim)
            row[dim] = score.count
            row[f"{dim}_level"] = score.level.value
        return row


@dataclass(frozen=True)
class CapabilitySpec:
    """Required level per dimension; dimensions absent from ``constraints`` are unconstrained."""

    name: str
    constraints: Mapping[str, Level]

    @property
    def slug(self) -> str:
        return slugify(self.name)

    @classmethod
    def from_stars(cls, name: str, stars: Mapping[str, int]) -> CapabilitySpec:
        constraints = {}
        for dim, n in stars.items():
            if dim not in DIMENSIONS:
                raise ValueError(f"{name}: unknown dimension {dim!r}")
            if n:
                constraints[dim] = STAR_LEVELS[n]
        return cls(name, constraints)


def slugify(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")


@dataclass(frozen=True)
class ComplexityConfig:
    thresholds: Mapping[str, Threshold]
    capabilities: tuple[CapabilitySpec, ...]

    @classmethod
    def from_dict(cls, data: Mapping) -> ComplexityConfig:
        thresholds = {
            dim: Threshold(int(spec["easy_max"]), int(spec["medium_max"]))
            for dim, spec in data["thresholds"].items()
        }
        missing = set(DIMENSIONS) - set(thresholds)
        if missing:
            raise ValueError(f"thresholds missing for {sorted(missing)}")
        for dim, t in thresholds.items():
            if t.easy_max > t.medium_max:
                raise ValueError(f"{dim}: easy_max exceeds medium_max")
        caps = tuple(CapabilitySpec.from_stars(name, stars) for name, stars in data.get("capabilities", {}).items())
        return cls(thresholds, caps)

    @classmethod
    def load(cls, path: str | Path | None = None) -> ComplexityConfig:
        if path is None:
            text = resources.files("dagbench").joinpath("data/complexity.json").read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        return cls.from_dict(json.loads(text))

    def capability(self, name: str) -> CapabilitySpec:
        key = slugify(name)
        for cap in self.capabilities:
            if cap.slug == key:
                return cap
        raise KeyError(f"unknown capability {name!r}")


_DEFAULT: ComplexityConfig | None = None


def default_config() -> ComplexityConfig:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = ComplexityConfig.load()
    return _DEFAULT


def builtin_capabilities() -> tuple[CapabilitySpec, ...]:
    return default_config().capabilities


def knowledge_count(
    graph: TaskGraph, registry: AppCategoryRegistry, applications: Mapping[str, str] | None = None
) -> int:
    apps = graph.applications if applications is None else applications
    categories = set()
    for node in graph.nodes:
        if node not in apps:
            raise KeyError(f"no application recorded for node {node!r}")
        categories.add(registry.category_of(apps[node]))
    return len(categories)


def classify(
    graph: TaskGraph,
    registry: AppCategoryRegistry | None = None,
    applications: Mapping[str, str] | None = None,
    config: ComplexityConfig | None = None,
) -> ComplexityProfile:
    registry = registry or AppCategoryRegistry.default()
    config = config or default_config()
    counts = {
        "dependency": len(graph.edge_set()),
        "instruction": len(graph.nodes),
        "knowledge": knowledge_count(graph, registry, applications),
        "hierarchy": graph_depth(graph),
        "branch": graph_width(graph),
    }
    return ComplexityProfile(
        **{dim: DimensionScore(c, config.thresholds[dim].level(c)) for dim, c in counts.items()}
    )


def matches_capability(profile: ComplexityProfile, spec: CapabilitySpec) -> bool:
    return all(profile.level(dim) == level for dim, level in spec.constraints.items())


def capability_tags(profile: ComplexityProfile, specs: Iterable[CapabilitySpec] | None = None) -> list[str]:
    specs = builtin_capabilities() if specs is None else specs
    return [s.slug for s in specs if matches_capability(profile, s)]


def build_capability_suite(
    tasks: Sequence[TaskGraph],
    spec: CapabilitySpec,
    registry: AppCategoryRegistry | None = None,
    config: ComplexityConfig | None = None,
) -> list[TaskGraph]:
    registry = registry or AppCategoryRegistry.default()
    return [t for t in tasks if matches_capability(classify(t, registry, config=config), spec)]
