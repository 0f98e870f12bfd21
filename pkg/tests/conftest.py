import random
from pathlib import Path

import pytest

from dagbench.io import load_bundle
from dagbench.model import TaskGraph

FIXTURES = Path(__file__).parent / "fixtures"
OFFICE = FIXTURES / "office"


def diamond(**kw) -> TaskGraph:
    return TaskGraph.from_edges("ABCD", [("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")], **kw)


def chain(n: int, prefix: str = "c") -> TaskGraph:
    ids = [f"{prefix}{i}" for i in range(n)]
    return TaskGraph.from_edges(ids, zip(ids, ids[1:]))


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def office_bundle():
    return load_bundle(OFFICE)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
