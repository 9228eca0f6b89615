"""Report writers: delimited tables, JSON documents, and figure rendering.

Figures are written straight to image files (Agg backend) next to the
delimited output; nothing opens a window.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import UNBOUNDED, GroupMetrics


def write_json(obj, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_tsv(header: Sequence[str], rows: Sequence[Sequence], path: str | Path) -> None:
    lines = ["\t".join(header)]
    for row in rows:
        lines.append("\t".join(str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _fmt_ratio(value) -> str:
    return "Unbounded" if value is UNBOUNDED else f"{value:.6f}"


def metrics_rows(metrics: Sequence[GroupMetrics]) -> list[list[str]]:
    return [
        [m.group_label, str(m.n_wrong), str(m.n_correct), _fmt_ratio(m.error_ratio), f"{m.coverage:.6f}"]
        for m in metrics
    ]


METRICS_HEADER = ["label", "n_wrong", "n_correct", "error_ratio", "coverage"]


def render_metrics_figure(metrics: Sequence[GroupMetrics], path: str | Path) -> None:
    """Horizontal bars of error ratio with coverage alongside, one row per group."""
    if not metrics:
        raise ValueError("no group metrics to plot")
    labels = [m.group_label for m in metrics]
    finite = [m.error_ratio for m in metrics if m.error_ratio is not UNBOUNDED]
    cap = max(finite) * 1.2 if finite else 1.0
    ratios = [cap if m.error_ratio is UNBOUNDED else m.error_ratio for m in metrics]
    coverages = [m.coverage for m in metrics]

    height = max(2.5, 0.45 * len(labels) + 1.2)
    fig, ax = plt.subplots(figsize=(8, height))
    y = range(len(labels))
    ax.barh([v + 0.2 for v in y], ratios, height=0.38, label="error ratio", color="#c44e52")
    ax.barh([v - 0.2 for v in y], coverages, height=0.38, label="coverage", color="#4c72b0")
    for i, m in enumerate(metrics):
        if m.error_ratio is UNBOUNDED:
            ax.annotate("unbounded", (ratios[i], i + 0.2), va="center", fontsize=8)
    ax.set_yticks(list(y))
    ax.set_yticklabels(labels, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("value")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_study_figure(pre: Sequence[float], post: Sequence[float], path: str | Path) -> None:
    """Two panels: mean accuracy before/after teaching, and per-person deltas."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))

    means = [sum(pre) / len(pre), sum(post) / len(post)]
    ax1.bar(["before", "after"], means, color=["#4c72b0", "#55a868"], width=0.6)
    for i, (xs, color) in enumerate(zip((pre, post), ("#4c72b0", "#55a868"))):
        ax1.scatter([i] * len(xs), xs, color="black", s=10, zorder=3, alpha=0.6)
    ax1.set_ylabel("failure-anticipation accuracy")
    ax1.set_ylim(0, 1.05)

    deltas = [b - a for a, b in zip(pre, post)]
    ax2.hist(deltas, bins=10, color="#8172b2", edgecolor="white")
    ax2.axvline(0, color="black", linewidth=1)
    ax2.set_xlabel("accuracy change after teaching")
    ax2.set_ylabel("participants")

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
