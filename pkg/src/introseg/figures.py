"""Matplotlib figures rendered beside the delimited report output."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .corpus import Agreement, AgreementReport
from .evaluation import EvalReport


def accuracy_vs_offset_figure(report: EvalReport, path: str | Path) -> Path:
    """Start/end accuracy curves over the offset grid, with CI bars if present."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    offsets = list(report.offsets)
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, acc, ci in (
        ("start", report.start_accuracy, report.start_ci),
        ("end", report.end_accuracy, report.end_ci),
    ):
        values = [acc[d] for d in offsets]
        errors = [ci[d] for d in offsets] if ci else None
        ax.errorbar(offsets, values, yerr=errors, marker="o", capsize=3, label=label)
    ax.set_xlabel("offset (tokens)")
    ax.set_ylabel("accuracy")
    ax.set_ylim(-0.02, 1.02)
    ax.set_xticks(offsets)
    title = "Boundary accuracy vs offset"
    if report.k is not None:
        title += f" (k={report.k})"
    ax.set_title(title)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def overlap_distribution_figure(overlaps: Mapping[str, float] | Sequence[float], path: str | Path) -> Path:
    """Jittered strip plot of per-episode overlap scores."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = list(overlaps.values()) if isinstance(overlaps, Mapping) else list(overlaps)
    rng = np.random.default_rng(0)
    jitter = rng.uniform(-0.2, 0.2, size=len(values))
    fig, ax = plt.subplots(figsize=(6, 2.8))
    ax.scatter(values, jitter, s=18, alpha=0.6)
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.5, 0.5)
    ax.set_yticks([])
    ax.set_xlabel("overlap score")
    ax.set_title(f"Per-episode overlap (n={len(values)})")
    ax.grid(True, axis="x", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def agreement_figure(report: AgreementReport, path: str | Path) -> Path:
    """Grouped bars of Perfect/Majority/None counts for starts and ends."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grades = list(Agreement)
    x = np.arange(len(grades))
    width = 0.38
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.bar(x - width / 2, [report.start_counts[g] for g in grades], width, label="start")
    ax.bar(x + width / 2, [report.end_counts[g] for g in grades], width, label="end")
    ax.set_xticks(x, [g.value for g in grades])
    ax.set_ylabel("episodes")
    ax.set_title(f"Annotator agreement ({report.multi_annotated} episodes)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
