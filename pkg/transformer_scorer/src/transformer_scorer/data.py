"""File formats and span construction.

This package talks to the segmentation toolkit purely through its JSON Lines
files: the corpus format (episode_id, program_id, tokens, annotations), the
gold format (episode_id, intro, agreement grades), the split manifest, and
the score file it emits ({"episode_id", "scores"}).

Long documents are divided into overlapping spans in subword space (the
model's sequence budget), but spans always start and end on word boundaries
so every word's subwords live together in at least one span.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

log = logging.getLogger(__name__)


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Episode:
    episode_id: str
    program_id: str
    words: tuple[str, ...]


@dataclass(frozen=True)
class GoldSpan:
    episode_id: str
    start: int | None  # None: no intro (or no agreement)
    end: int | None
    usable: bool  # both boundaries reached agreement


def _read_jsonl(path: str | Path):
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {line_no}: invalid JSON: {exc.msg}") from exc
            yield line_no, obj


def read_corpus(path: str | Path) -> list[Episode]:
    episodes = []
    seen = set()
    for line_no, obj in _read_jsonl(path):
        eid = obj.get("episode_id")
        tokens = obj.get("tokens")
        if not isinstance(eid, str) or not isinstance(tokens, list):
            raise DataError(f"{path}: line {line_no}: expected episode_id and tokens")
        if eid in seen:
            raise DataError(f"{path}: line {line_no}: duplicate episode_id '{eid}'")
        seen.add(eid)
        words = []
        for i, tok in enumerate(tokens):
            text = tok.get("text") if isinstance(tok, dict) else None
            if not isinstance(text, str) or not text:
                raise DataError(f"{path}: line {line_no}: token {i} has no text")
            words.append(text)
        episodes.append(Episode(eid, str(obj.get("program_id", "")), tuple(words)))
    return episodes


def read_gold(path: str | Path) -> dict[str, GoldSpan]:
    golds: dict[str, GoldSpan] = {}
    for line_no, obj in _read_jsonl(path):
        eid = obj.get("episode_id")
        if not isinstance(eid, str):
            raise DataError(f"{path}: line {line_no}: missing episode_id")
        intro = obj.get("intro")
        usable = obj.get("start_agreement") != "none" and obj.get("end_agreement") != "none"
        if intro is None:
            golds[eid] = GoldSpan(eid, None, None, usable)
        else:
            golds[eid] = GoldSpan(eid, int(intro["start"]), int(intro["end"]), usable)
    return golds


def read_split(path: str | Path) -> dict[str, set[str]]:
    with Path(path).open("r", encoding="utf-8") as fh:
        obj = json.load(fh)
    buckets = {}
    for name in ("train", "seen_test", "seen_val", "unseen_test", "unseen_val"):
        if name not in obj:
            raise DataError(f"{path}: split manifest missing bucket '{name}'")
        buckets[name] = set(obj[name])
    return buckets


def write_scores(path: str | Path, rows: list[tuple[str, list[float]]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for episode_id, scores in rows:
            fh.write(json.dumps({"episode_id": episode_id, "scores": scores}) + "\n")


# --------------------------------------------------------------------------
# Subword-aware spans over word boundaries
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WordSpan:
    """Contiguous word range [word_start, word_end) packed into one model input."""

    word_start: int
    word_end: int

    @property
    def length(self) -> int:
        return self.word_end - self.word_start


def tokenize_words(tokenizer, words: tuple[str, ...]) -> list[list[str]]:
    """WordPiece pieces per word; a word may yield zero pieces (scored 0.5 later)."""
    return [tokenizer.tokenize(w) for w in words]


def build_spans(piece_counts: list[int], budget: int, overlap: int) -> list[WordSpan]:
    """Tile the word sequence with spans of at most ``budget`` subwords.

    Consecutive spans share roughly ``overlap`` subwords, rewound to a word
    boundary. Raises if a single word exceeds the budget (it could never be
    packed whole).
    """
    n = len(piece_counts)
    if n == 0:
        return []
    if budget < 1 or not 0 <= overlap < budget:
        raise DataError(f"need 0 <= overlap < budget, got budget={budget} overlap={overlap}")
    too_big = [i for i, c in enumerate(piece_counts) if c > budget]
    if too_big:
        raise DataError(f"word {too_big[0]} has {piece_counts[too_big[0]]} subwords, budget {budget}")

    spans = []
    start = 0
    while True:
        used = 0
        end = start
        while end < n and used + piece_counts[end] <= budget:
            used += piece_counts[end]
            end += 1
        spans.append(WordSpan(start, end))
        if end >= n:
            return spans
        # rewind ~overlap subwords to a word boundary, keeping progress
        rewound = end
        acc = 0
        while rewound > start + 1 and acc < overlap:
            rewound -= 1
            acc += piece_counts[rewound]
        start = max(rewound, start + 1)


def merge_spans(doc_len: int, spans: list[tuple[WordSpan, list[float]]]) -> list[float]:
    """Maximum-minimum-context merge of per-span word scores.

    A word covered by several spans keeps the score from the span where its
    distance to the nearer span edge is largest; ties go to the earlier span.
    Mirrors the merge rule the downstream toolkit applies to its own spans.
    """
    merged: list[float | None] = [None] * doc_len
    best = [-1] * doc_len
    for span, scores in sorted(spans, key=lambda s: (s[0].word_start, s[0].word_end)):
        if len(scores) != span.length:
            raise DataError(f"span {span}: {len(scores)} scores for {span.length} words")
        for offset in range(span.length):
            word = span.word_start + offset
            ctx = min(word - span.word_start, span.word_end - 1 - word)
            if ctx > best[word]:
                best[word] = ctx
                merged[word] = float(scores[offset])
    missing = [i for i, v in enumerate(merged) if v is None]
    if missing:
        raise DataError(f"words not covered by any span: {missing[:5]}")
    return merged  # type: ignore[return-value]
