"""Overlapping-span chunking for scorers with bounded context.

Long token sequences are tiled with fixed-size windows that overlap, and the
per-window score lists are merged back into a single document-level sequence.
Where windows overlap, a token keeps the score from the window in which it
has the most context, i.e. the window maximizing its minimum distance to
either window edge; ties go to the earlier window.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence


class ChunkError(ValueError):
    pass


@dataclass(frozen=True)
class ChunkConfig:
    max_len: int = 512
    overlap: int = 128

    def __post_init__(self) -> None:
        if self.max_len < 1:
            raise ChunkError(f"max_len must be positive, got {self.max_len}")
        if not 0 <= self.overlap < self.max_len:
            raise ChunkError(f"overlap must satisfy 0 <= overlap < max_len, got {self.overlap}")

    @property
    def stride(self) -> int:
        return self.max_len - self.overlap


@dataclass(frozen=True)
class SpanWindow:
    doc_offset: int
    length: int

    @property
    def end(self) -> int:
        return self.doc_offset + self.length


def split(doc_len: int, cfg: ChunkConfig = ChunkConfig()) -> list[SpanWindow]:
    """Tile [0, doc_len) with windows of at most ``cfg.max_len`` tokens.

    Consecutive offsets differ by ``cfg.stride``; the final window is
    shortened (never padded) so the last token is covered exactly once
    past the previous window's reach.
    """
    if doc_len < 1:
        raise ChunkError(f"doc_len must be >= 1, got {doc_len}")
    windows = []
    offset = 0
    while True:
        length = min(cfg.max_len, doc_len - offset)
        windows.append(SpanWindow(doc_offset=offset, length=length))
        if offset + length >= doc_len:
            return windows
        offset += cfg.stride


def context_size(token: int, window: SpanWindow) -> int:
    """Minimum distance from ``token`` to either edge of ``window``."""
    return min(token - window.doc_offset, window.end - 1 - token)


def merge(doc_len: int, windows: Sequence[tuple[SpanWindow, Sequence[float]]]) -> list[float]:
    """Merge per-window scores into one length-``doc_len`` score list.

    Every token takes its score from the covering window with maximal
    context (ties: the window with the smaller offset). The result is
    independent of the order windows are supplied in. Raises on a window
    whose score list does not match its length, or on uncovered tokens.
    """
    for window, scores in windows:
        if len(scores) != window.length:
            raise ChunkError(
                f"window at offset {window.doc_offset}: {len(scores)} scores for length {window.length}"
            )
    merged: list[float | None] = [None] * doc_len
    best: list[int] = [-1] * doc_len
    for window, scores in sorted(windows, key=lambda item: (item[0].doc_offset, item[0].length)):
        for pos in range(window.length):
            token = window.doc_offset + pos
            if not 0 <= token < doc_len:
                raise ChunkError(f"window at offset {window.doc_offset} exceeds document length {doc_len}")
            ctx = context_size(token, window)
            if ctx > best[token]:
                best[token] = ctx
                merged[token] = float(scores[pos])
    uncovered = [i for i, value in enumerate(merged) if value is None]
    if uncovered:
        raise ChunkError(f"tokens not covered by any window: {uncovered[:5]}{'...' if len(uncovered) > 5 else ''}")
    return merged  # type: ignore[return-value]
