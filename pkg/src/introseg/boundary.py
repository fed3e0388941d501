"""Maximum-difference boundary detection over a score sequence.

The start likelihood at token i is the mean Is-intro score of the k tokens
starting at i minus the mean of the k tokens ending at i-1, so a step up at
i scores maximally and the chosen index is the first token of the intro.
End likelihoods mirror this (mean before minus mean after), so the chosen
index is the first token after the intro, matching half-open ranges.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .corpus import TokenRange
from .fileio import read_jsonl, write_jsonl
from .scorer import ScoreSequence


class BoundaryError(ValueError):
    pass


@dataclass(frozen=True)
class BoundaryConfig:
    k: int = 50
    enforce_order: bool = True
    min_peak: float | None = None

    def __post_init__(self) -> None:
        if self.k < 1:
            raise BoundaryError(f"window size k must be >= 1, got {self.k}")
        if self.min_peak is not None and not 0.0 <= self.min_peak <= 1.0:
            raise BoundaryError(f"min_peak must lie in [0, 1], got {self.min_peak}")


@dataclass(frozen=True)
class SegmentPrediction:
    """Predicted intro boundaries for one episode.

    ``start``/``end`` are recorded independently; ``intro`` is the range they
    form when both are present and ordered. ``reason`` explains an absent
    boundary (abstention or no valid end after the start).
    """

    episode_id: str
    start: int | None
    end: int | None
    start_peak: float | None
    end_peak: float | None
    reason: str | None = None

    @property
    def intro(self) -> TokenRange | None:
        if self.start is None or self.end is None or self.start >= self.end:
            return None
        return TokenRange(self.start, self.end)

    def to_dict(self) -> dict:
        obj = {
            "episode_id": self.episode_id,
            "start": self.start,
            "end": self.end,
            "start_peak": self.start_peak,
            "end_peak": self.end_peak,
        }
        if self.reason is not None:
            obj["reason"] = self.reason
        return obj

    @classmethod
    def from_dict(cls, obj: dict) -> "SegmentPrediction":
        return cls(
            episode_id=obj["episode_id"],
            start=obj.get("start"),
            end=obj.get("end"),
            start_peak=obj.get("start_peak"),
            end_peak=obj.get("end_peak"),
            reason=obj.get("reason"),
        )


def _window_diffs(scores: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """(valid indices, (sum of k scores from i - sum of k scores before i) / k).

    A single division keeps exact ties exact: where window sums are exactly
    representable, equal mean-differences stay bitwise equal, so earliest-index
    tie-breaking survives positive affine rescaling of the scores.
    """
    n = scores.shape[0]
    if n < 2 * k:
        raise BoundaryError(
            f"sequence of length {n} is shorter than 2k = {2 * k}; lower k to at most {n // 2}"
        )
    prefix = np.concatenate(([0.0], np.cumsum(scores)))
    idx = np.arange(k, n - k + 1)
    after = prefix[idx + k] - prefix[idx]
    before = prefix[idx] - prefix[idx - k]
    return idx, (after - before) / k


def start_likelihoods(scores: ScoreSequence, k: int) -> list[tuple[int, float]]:
    """(index, likelihood) for every candidate start index in [k, N-k]."""
    arr = np.asarray(scores.scores, dtype=np.float64)
    idx, diffs = _window_diffs(arr, k)
    return [(int(i), float(p)) for i, p in zip(idx, diffs)]


def end_likelihoods(scores: ScoreSequence, k: int) -> list[tuple[int, float]]:
    """(index, likelihood) for every candidate end index in [k, N-k]."""
    arr = np.asarray(scores.scores, dtype=np.float64)
    idx, diffs = _window_diffs(arr, k)
    return [(int(j), float(-q)) for j, q in zip(idx, diffs)]


def _argmax_earliest(points: list[tuple[int, float]]) -> tuple[int, float]:
    best_idx, best_val = points[0]
    for idx, val in points[1:]:
        if val > best_val:
            best_idx, best_val = idx, val
    return best_idx, best_val


def detect(scores: ScoreSequence, cfg: BoundaryConfig = BoundaryConfig()) -> SegmentPrediction:
    """Pick the start and end indices maximizing their likelihoods.

    Ties resolve to the earliest index. With ``enforce_order`` the end search
    is restricted to indices after the chosen start; without it, start and
    end are independent global argmaxes (the resulting pair may not form a
    range). With ``min_peak`` set, a start peak below it abstains entirely.
    """
    start_pts = start_likelihoods(scores, cfg.k)
    start_idx, start_peak = _argmax_earliest(start_pts)

    if cfg.min_peak is not None and start_peak < cfg.min_peak:
        return SegmentPrediction(
            episode_id=scores.episode_id,
            start=None,
            end=None,
            start_peak=start_peak,
            end_peak=None,
            reason=f"start peak {start_peak:.4f} below min_peak {cfg.min_peak}",
        )

    end_pts = end_likelihoods(scores, cfg.k)
    if cfg.enforce_order:
        end_pts = [(j, q) for j, q in end_pts if j > start_idx]
        if not end_pts:
            return SegmentPrediction(
                episode_id=scores.episode_id,
                start=start_idx,
                end=None,
                start_peak=start_peak,
                end_peak=None,
                reason=f"no end candidate after start index {start_idx}",
            )
    end_idx, end_peak = _argmax_earliest(end_pts)

    return SegmentPrediction(
        episode_id=scores.episode_id,
        start=start_idx,
        end=end_idx,
        start_peak=start_peak,
        end_peak=end_peak,
    )


def save_predictions(predictions: Iterable[SegmentPrediction], path: str | Path) -> None:
    write_jsonl(path, (p.to_dict() for p in predictions))


def load_predictions(path: str | Path) -> dict[str, SegmentPrediction]:
    predictions: dict[str, SegmentPrediction] = {}
    for line_no, obj in read_jsonl(path):
        try:
            pred = SegmentPrediction.from_dict(obj)
        except KeyError as exc:
            raise BoundaryError(f"{path}: line {line_no}: missing field {exc}") from exc
        if pred.episode_id in predictions:
            raise BoundaryError(f"{path}: line {line_no}: duplicate episode_id '{pred.episode_id}'")
        predictions[pred.episode_id] = pred
    return predictions
