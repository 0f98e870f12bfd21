"""Figures written next to the CSV reports."""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .complexity import DIMENSIONS, ComplexityProfile, Level  # noqa: E402
from .evaluator import BatchRow  # noqa: E402

LEVEL_COLORS = {Level.EASY: "#8cc084", Level.MEDIUM: "#f2c14e", Level.HARD: "#d1495b"}


def plot_batch_metrics(rows: Sequence[BatchRow], path: str | Path) -> Path:
    """Grouped bars of CR, LC and AMS per task; successful tasks are starred."""
    path = Path(path)
    n = len(rows)
    fig, ax = plt.subplots(figsize=(max(6.0, 0.5 * n + 2), 4))
    x = np.arange(n)
    width = 0.27
    series = {
        "CR": [float(r.report.cr) for r in rows],
        "LC": [float(r.report.lc) for r in rows],
        "AMS": [float(r.report.ams) for r in rows],
    }
    for k, (label, values) in enumerate(series.items()):
        ax.bar(x + (k - 1) * width, values, width, label=label)
    for i, r in enumerate(rows):
        if r.report.sr:
            ax.plot(i, 1.05, marker="*", color="k", markersize=8)
    ax.set_xticks(x)
    ax.set_xticklabels([r.task_id for r in rows], rotation=60, ha="right", fontsize=7)
    ax.set_ylim(0, 1.12)
    ax.set_ylabel("score")
    ax.legend(loc="lower right", fontsize=8, frameon=False)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_complexity_distribution(profiles: Sequence[ComplexityProfile], path: str | Path) -> Path:
    """Stacked share of Easy/Medium/Hard tasks for each complexity dimension."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    total = max(len(profiles), 1)
    bottom = np.zeros(len(DIMENSIONS))
    for level in Level:
        share = np.array([sum(p.level(d) is level for p in profiles) / total for d in DIMENSIONS])
        ax.bar(DIMENSIONS, share, bottom=bottom, color=LEVEL_COLORS[level], label=level.value)
        bottom += share
    ax.set_ylabel("share of tasks")
    ax.set_ylim(0, 1)
    ax.legend(ncol=3, fontsize=8, frameon=False, loc="upper center", bbox_to_anchor=(0.5, 1.15))
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
