"""Evaluation: boundary accuracy versus offset, token overlap, run aggregation.

Accuracy at offset d is the fraction of evaluable episodes whose predicted
boundary lies within d tokens of gold, computed independently for starts and
ends. The overlap score is the Jaccard ratio of predicted and gold intro
token sets. Multiple runs aggregate to means with 95% confidence half-widths
from the t-distribution over runs.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as scipy_stats

from .boundary import SegmentPrediction
from .corpus import GoldLabel, TokenRange

DEFAULT_OFFSETS = (0, 1, 3, 5, 9)


class EvalError(ValueError):
    pass


def overlap_score(pred: TokenRange | None, gold: TokenRange | None) -> float:
    """Jaccard overlap of the two token-index sets.

    Both absent counts as a correct abstention (1.0); exactly one absent is a
    total miss (0.0).
    """
    if pred is None and gold is None:
        return 1.0
    if pred is None or gold is None:
        return 0.0
    intersection = max(0, min(pred.end, gold.end) - max(pred.start, gold.start))
    union = len(pred) + len(gold) - intersection
    return intersection / union


@dataclass(frozen=True)
class RunEval:
    """Metrics for one prediction run against one gold set."""

    offsets: tuple[int, ...]
    start_accuracy: dict[int, float]
    end_accuracy: dict[int, float]
    overlaps: dict[str, float]  # episode_id -> overlap on the evaluable set
    episode_count: int
    excluded: int  # gold absent or without agreement

    @property
    def mean_overlap(self) -> float:
        return float(np.mean(list(self.overlaps.values()))) if self.overlaps else 0.0


def _boundary_hits(
    predicted: int | None,
    gold: int,
    offsets: Sequence[int],
) -> dict[int, bool]:
    if predicted is None:
        return {d: False for d in offsets}
    delta = abs(predicted - gold)
    return {d: delta <= d for d in offsets}


def offset_accuracy(
    predictions: Mapping[str, SegmentPrediction],
    golds: Mapping[str, GoldLabel],
    offsets: Sequence[int] = DEFAULT_OFFSETS,
) -> RunEval:
    """Evaluate one run.

    Episodes whose gold intro is absent or lacked agreement are excluded
    from the evaluable set (and counted). Every evaluable episode must have
    a prediction; a prediction with a missing boundary scores a miss at
    every offset.
    """
    offsets = tuple(sorted(set(int(d) for d in offsets)))
    if not offsets:
        raise EvalError("no offsets given")
    evaluable = [g for g in golds.values() if g.intro is not None and g.usable]
    excluded = len(golds) - len(evaluable)
    if not evaluable:
        raise EvalError("no evaluable episodes (every gold intro is absent or unagreed)")

    start_hits = {d: 0 for d in offsets}
    end_hits = {d: 0 for d in offsets}
    overlaps: dict[str, float] = {}
    for gold in evaluable:
        pred = predictions.get(gold.episode_id)
        if pred is None:
            raise EvalError(f"no prediction for evaluable episode '{gold.episode_id}'")
        for d, hit in _boundary_hits(pred.start, gold.intro.start, offsets).items():
            start_hits[d] += hit
        for d, hit in _boundary_hits(pred.end, gold.intro.end, offsets).items():
            end_hits[d] += hit
        overlaps[gold.episode_id] = overlap_score(pred.intro, gold.intro)

    n = len(evaluable)
    return RunEval(
        offsets=offsets,
        start_accuracy={d: start_hits[d] / n for d in offsets},
        end_accuracy={d: end_hits[d] / n for d in offsets},
        overlaps=overlaps,
        episode_count=n,
        excluded=excluded,
    )


@dataclass(frozen=True)
class EvalReport:
    """Per-offset accuracies and overlap, aggregated over one or more runs.

    Confidence fields are half-widths of 95% t-intervals over runs and are
    None for a single run.
    """

    offsets: tuple[int, ...]
    runs: tuple[RunEval, ...]
    start_accuracy: dict[int, float]
    end_accuracy: dict[int, float]
    start_ci: dict[int, float] | None
    end_ci: dict[int, float] | None
    mean_overlap: float
    overlap_ci: float | None
    episode_count: int
    excluded: int
    k: int | None = None
    scorer: str | None = None

    def to_dict(self) -> dict:
        return {
            "offsets": list(self.offsets),
            "n_runs": len(self.runs),
            "episode_count": self.episode_count,
            "excluded": self.excluded,
            "k": self.k,
            "scorer": self.scorer,
            "start_accuracy": {str(d): self.start_accuracy[d] for d in self.offsets},
            "end_accuracy": {str(d): self.end_accuracy[d] for d in self.offsets},
            "start_ci": {str(d): self.start_ci[d] for d in self.offsets} if self.start_ci else None,
            "end_ci": {str(d): self.end_ci[d] for d in self.offsets} if self.end_ci else None,
            "mean_overlap": self.mean_overlap,
            "overlap_ci": self.overlap_ci,
            "per_run_mean_overlap": [run.mean_overlap for run in self.runs],
        }


def ci_half_width(values: Sequence[float], confidence: float = 0.95) -> float:
    """t-interval half-width over independent run values (needs >= 2 runs)."""
    r = len(values)
    if r < 2:
        raise EvalError("confidence interval requires at least 2 runs")
    spread = float(np.std(values, ddof=1))
    t = float(scipy_stats.t.ppf(0.5 + confidence / 2.0, r - 1))
    return t * spread / math.sqrt(r)


def aggregate_runs(
    runs: Sequence[RunEval],
    k: int | None = None,
    scorer: str | None = None,
) -> EvalReport:
    """Mean (and, for >= 2 runs, 95% CI half-width) of every metric across runs."""
    if not runs:
        raise EvalError("no runs to aggregate")
    offsets = runs[0].offsets
    for run in runs[1:]:
        if run.offsets != offsets:
            raise EvalError(f"offset grids differ across runs: {offsets} vs {run.offsets}")

    multi = len(runs) >= 2
    start_acc = {d: float(np.mean([r.start_accuracy[d] for r in runs])) for d in offsets}
    end_acc = {d: float(np.mean([r.end_accuracy[d] for r in runs])) for d in offsets}
    overlap_values = [r.mean_overlap for r in runs]
    return EvalReport(
        offsets=offsets,
        runs=tuple(runs),
        start_accuracy=start_acc,
        end_accuracy=end_acc,
        start_ci={d: ci_half_width([r.start_accuracy[d] for r in runs]) for d in offsets} if multi else None,
        end_ci={d: ci_half_width([r.end_accuracy[d] for r in runs]) for d in offsets} if multi else None,
        mean_overlap=float(np.mean(overlap_values)),
        overlap_ci=ci_half_width(overlap_values) if multi else None,
        episode_count=runs[0].episode_count,
        excluded=runs[0].excluded,
        k=k,
        scorer=scorer,
    )


def render_text_table(report: EvalReport) -> str:
    """Aligned accuracy-versus-offset table: starts then ends, one row per kind."""
    headers = ["offset"] + [str(d) for d in report.offsets]
    rows = []

    def fmt_row(label: str, values: dict[int, float], cis: dict[int, float] | None) -> list[str]:
        cells = [label]
        for d in report.offsets:
            if cis is not None:
                cells.append(f"{values[d]:.3f} ({cis[d]:.3f})")
            else:
                cells.append(f"{values[d]:.3f}")
        return cells

    rows.append(fmt_row("start", report.start_accuracy, report.start_ci))
    rows.append(fmt_row("end", report.end_accuracy, report.end_ci))

    widths = [max(len(row[i]) for row in [headers] + rows) for i in range(len(headers))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in [headers] + rows]
    overlap = f"mean overlap: {report.mean_overlap:.3f}"
    if report.overlap_ci is not None:
        overlap += f" ({report.overlap_ci:.3f})"
    lines.append(overlap)
    meta = f"episodes: {report.episode_count} (excluded: {report.excluded}), runs: {len(report.runs)}"
    if report.k is not None:
        meta += f", k: {report.k}"
    if report.scorer:
        meta += f", scorer: {report.scorer}"
    lines.append(meta)
    return "\n".join(lines) + "\n"


def overlaps_csv(runs: Sequence[RunEval]) -> str:
    """Per-episode overlap rows (episode_id, overlap); multi-run files repeat ids."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["episode_id", "overlap"])
    for run in runs:
        for episode_id in sorted(run.overlaps):
            writer.writerow([episode_id, f"{run.overlaps[episode_id]:.6f}"])
    return buf.getvalue()
