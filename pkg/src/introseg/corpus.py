"""Transcript corpus model: tokens, annotations, gold resolution, agreement.

A corpus is a list of transcript documents, one per episode. Each document
carries the ASR word sequence (optionally with word timings in milliseconds)
and zero or more human annotations of the episode-introduction span. Two
annotated boundary positions count as agreeing when their word start times
differ by less than a tolerance (default 2000 ms); documents without timings
fall back to a token-index tolerance.

Ground truth is resolved per document by clustering annotator boundaries
under that agreement relation and taking the median position of a majority
cluster. All types are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from statistics import median_low
from typing import Iterable, Sequence

from .fileio import read_jsonl, write_jsonl

DEFAULT_TOLERANCE_MS = 2000
DEFAULT_TOLERANCE_TOKENS = 7


class CorpusError(ValueError):
    """A corpus file or document violates the schema or an invariant."""


@dataclass(frozen=True)
class Token:
    """One ASR word. ``start_ms``/``end_ms`` are word timings when available."""

    text: str
    index: int
    start_ms: int | None = None
    end_ms: int | None = None


@dataclass(frozen=True)
class TokenRange:
    """Half-open token-index interval [start, end). Never empty."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise CorpusError(f"invalid token range [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    def to_dict(self) -> dict:
        return {"start": self.start, "end": self.end}

    @classmethod
    def from_dict(cls, obj: dict) -> "TokenRange":
        return cls(start=obj["start"], end=obj["end"])


@dataclass(frozen=True)
class Annotation:
    """One annotator's judgement; ``intro`` is None when they marked no intro."""

    annotator_id: str
    intro: TokenRange | None


@dataclass(frozen=True)
class TranscriptDoc:
    episode_id: str
    program_id: str
    tokens: tuple[Token, ...]
    annotations: tuple[Annotation, ...] = ()

    def __len__(self) -> int:
        return len(self.tokens)


class Agreement(str, Enum):
    PERFECT = "perfect"
    MAJORITY = "majority"
    NONE = "none"


@dataclass(frozen=True)
class GoldLabel:
    """Resolved ground truth for one episode.

    ``intro`` is None either because annotators agreed there is no
    introduction (agreement grades Perfect/Majority) or because they failed
    to agree (grade None on the failing boundary).
    """

    episode_id: str
    intro: TokenRange | None
    start_agreement: Agreement
    end_agreement: Agreement

    def __post_init__(self) -> None:
        if self.intro is not None and Agreement.NONE in (self.start_agreement, self.end_agreement):
            raise CorpusError(f"{self.episode_id}: gold intro present without agreement")

    @property
    def usable(self) -> bool:
        """True when both boundaries reached at least majority agreement."""
        return self.start_agreement is not Agreement.NONE and self.end_agreement is not Agreement.NONE

    def to_dict(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "intro": self.intro.to_dict() if self.intro else None,
            "start_agreement": self.start_agreement.value,
            "end_agreement": self.end_agreement.value,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "GoldLabel":
        intro = obj.get("intro")
        return cls(
            episode_id=obj["episode_id"],
            intro=TokenRange.from_dict(intro) if intro else None,
            start_agreement=Agreement(obj["start_agreement"]),
            end_agreement=Agreement(obj["end_agreement"]),
        )


@dataclass(frozen=True)
class AgreementReport:
    """Agreement bucket counts over documents with >= 3 annotations."""

    start_counts: dict[Agreement, int]
    end_counts: dict[Agreement, int]
    start_episodes: dict[Agreement, tuple[str, ...]]
    end_episodes: dict[Agreement, tuple[str, ...]]
    multi_annotated: int

    def to_dict(self) -> dict:
        return {
            "multi_annotated": self.multi_annotated,
            "starts": {a.value: self.start_counts[a] for a in Agreement},
            "ends": {a.value: self.end_counts[a] for a in Agreement},
            "start_episodes": {a.value: list(self.start_episodes[a]) for a in Agreement},
            "end_episodes": {a.value: list(self.end_episodes[a]) for a in Agreement},
        }


# --------------------------------------------------------------------------
# Parsing / serialization
# --------------------------------------------------------------------------


def _parse_token(obj: dict, index: int, where: str) -> Token:
    text = obj.get("text")
    if not isinstance(text, str) or not text:
        raise CorpusError(f"{where}: token {index}: field 'text' must be a non-empty string")
    start_ms = obj.get("start_ms")
    end_ms = obj.get("end_ms")
    if start_ms is not None:
        if not isinstance(start_ms, int) or isinstance(start_ms, bool) or start_ms < 0:
            raise CorpusError(f"{where}: token {index}: field 'start_ms' must be a non-negative integer")
    if end_ms is not None and (not isinstance(end_ms, int) or isinstance(end_ms, bool)):
        raise CorpusError(f"{where}: token {index}: field 'end_ms' must be an integer")
    if start_ms is not None and end_ms is not None and start_ms > end_ms:
        raise CorpusError(f"{where}: token {index}: start_ms {start_ms} > end_ms {end_ms}")
    return Token(text=text, index=index, start_ms=start_ms, end_ms=end_ms)


def doc_from_dict(obj: dict, where: str = "document") -> TranscriptDoc:
    """Build a validated TranscriptDoc from its JSON object form."""
    episode_id = obj.get("episode_id")
    if not isinstance(episode_id, str) or not episode_id:
        raise CorpusError(f"{where}: field 'episode_id' must be a non-empty string")
    program_id = obj.get("program_id")
    if not isinstance(program_id, str) or not program_id:
        raise CorpusError(f"{where}: episode {episode_id}: field 'program_id' must be a non-empty string")
    raw_tokens = obj.get("tokens")
    if not isinstance(raw_tokens, list):
        raise CorpusError(f"{where}: episode {episode_id}: field 'tokens' must be a list")

    tokens = []
    prev_start: int | None = None
    for i, raw in enumerate(raw_tokens):
        if not isinstance(raw, dict):
            raise CorpusError(f"{where}: episode {episode_id}: token {i} must be an object")
        tok = _parse_token(raw, i, f"{where}: episode {episode_id}")
        if tok.start_ms is not None and prev_start is not None and tok.start_ms < prev_start:
            raise CorpusError(
                f"{where}: episode {episode_id}: token {i}: start_ms decreases "
                f"({prev_start} -> {tok.start_ms})"
            )
        if tok.start_ms is not None:
            prev_start = tok.start_ms
        tokens.append(tok)

    raw_anns = obj.get("annotations", [])
    if not isinstance(raw_anns, list):
        raise CorpusError(f"{where}: episode {episode_id}: field 'annotations' must be a list")
    annotations = []
    for raw in raw_anns:
        if not isinstance(raw, dict) or not isinstance(raw.get("annotator_id"), str):
            raise CorpusError(f"{where}: episode {episode_id}: annotation missing 'annotator_id'")
        annotator = raw["annotator_id"]
        intro_obj = raw.get("intro")
        intro = None
        if intro_obj is not None:
            if not isinstance(intro_obj, dict):
                raise CorpusError(
                    f"{where}: episode {episode_id}: annotator {annotator}: 'intro' must be an object or null"
                )
            start, end = intro_obj.get("start"), intro_obj.get("end")
            if not isinstance(start, int) or not isinstance(end, int) or not (0 <= start < end <= len(tokens)):
                raise CorpusError(
                    f"{where}: episode {episode_id}: annotator {annotator}: "
                    f"intro range [{start}, {end}) invalid for {len(tokens)} tokens"
                )
            intro = TokenRange(start, end)
        annotations.append(Annotation(annotator_id=annotator, intro=intro))

    return TranscriptDoc(
        episode_id=episode_id,
        program_id=program_id,
        tokens=tuple(tokens),
        annotations=tuple(annotations),
    )


def doc_to_dict(doc: TranscriptDoc) -> dict:
    tokens = []
    for tok in doc.tokens:
        obj: dict = {"text": tok.text}
        if tok.start_ms is not None:
            obj["start_ms"] = tok.start_ms
        if tok.end_ms is not None:
            obj["end_ms"] = tok.end_ms
        tokens.append(obj)
    return {
        "episode_id": doc.episode_id,
        "program_id": doc.program_id,
        "tokens": tokens,
        "annotations": [
            {"annotator_id": a.annotator_id, "intro": a.intro.to_dict() if a.intro else None}
            for a in doc.annotations
        ],
    }


def load_corpus(path: str | Path) -> list[TranscriptDoc]:
    """Load and validate a JSON Lines corpus; order follows the file."""
    docs: list[TranscriptDoc] = []
    seen_ids: set[str] = set()
    for line_no, obj in read_jsonl(path):
        doc = doc_from_dict(obj, where=f"{path}: line {line_no}")
        if doc.episode_id in seen_ids:
            raise CorpusError(f"{path}: line {line_no}: duplicate episode_id '{doc.episode_id}'")
        seen_ids.add(doc.episode_id)
        docs.append(doc)
    return docs


def save_corpus(docs: Iterable[TranscriptDoc], path: str | Path) -> None:
    write_jsonl(path, (doc_to_dict(d) for d in docs))


def load_gold(path: str | Path) -> dict[str, GoldLabel]:
    golds: dict[str, GoldLabel] = {}
    for line_no, obj in read_jsonl(path):
        try:
            gold = GoldLabel.from_dict(obj)
        except (KeyError, ValueError) as exc:
            raise CorpusError(f"{path}: line {line_no}: bad gold record: {exc}") from exc
        if gold.episode_id in golds:
            raise CorpusError(f"{path}: line {line_no}: duplicate episode_id '{gold.episode_id}'")
        golds[gold.episode_id] = gold
    return golds


def save_gold(golds: Iterable[GoldLabel], path: str | Path) -> None:
    write_jsonl(path, (g.to_dict() for g in golds))


# --------------------------------------------------------------------------
# Agreement and gold resolution
# --------------------------------------------------------------------------


def positions_agree(
    a: int,
    b: int,
    doc: TranscriptDoc,
    tolerance_ms: int = DEFAULT_TOLERANCE_MS,
    tolerance_tokens: int = DEFAULT_TOLERANCE_TOKENS,
) -> bool:
    """Whether two boundary token positions count as the same boundary.

    Compares word start times (strictly less than ``tolerance_ms``) when both
    tokens carry them, else token-index distance (at most ``tolerance_tokens``).
    Symmetric and reflexive.
    """
    ta, tb = doc.tokens[a], doc.tokens[b]
    if ta.start_ms is not None and tb.start_ms is not None:
        return abs(ta.start_ms - tb.start_ms) < tolerance_ms
    return abs(a - b) <= tolerance_tokens


def _clusters(
    positions: Sequence[int],
    doc: TranscriptDoc,
    tolerance_ms: int,
    tolerance_tokens: int,
) -> list[list[int]]:
    """Single-linkage connected components of positions under positions_agree."""
    n = len(positions)
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(n):
        for j in range(i + 1, n):
            if positions_agree(positions[i], positions[j], doc, tolerance_ms, tolerance_tokens):
                parent[find(i)] = find(j)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(positions[i])
    return list(groups.values())


def _winning_cluster(
    positions: Sequence[int],
    doc: TranscriptDoc,
    n_annotators: int,
    tolerance_ms: int,
    tolerance_tokens: int,
) -> tuple[list[int] | None, Agreement]:
    """Largest cluster holding a strict majority of all annotators, if any."""
    if not positions:
        return None, Agreement.NONE
    clusters = _clusters(positions, doc, tolerance_ms, tolerance_tokens)
    best = max(clusters, key=len)
    if 2 * len(best) <= n_annotators:
        return None, Agreement.NONE
    grade = Agreement.PERFECT if len(best) == n_annotators else Agreement.MAJORITY
    return best, grade


def resolve_gold(
    doc: TranscriptDoc,
    tolerance_ms: int = DEFAULT_TOLERANCE_MS,
    tolerance_tokens: int = DEFAULT_TOLERANCE_TOKENS,
) -> GoldLabel:
    """Resolve a document's annotations into a single gold label.

    Starts and ends are clustered independently under the agreement relation;
    a strict-majority cluster wins and its lower-median position becomes the
    gold boundary. A single-annotator document is trusted verbatim with a
    Perfect grade. A majority of "none" votes yields an absent intro with the
    corresponding grade. No majority on either boundary yields grade None.
    """
    anns = doc.annotations
    if not anns:
        raise CorpusError(f"{doc.episode_id}: cannot resolve gold without annotations")
    n = len(anns)

    if n == 1:
        return GoldLabel(doc.episode_id, anns[0].intro, Agreement.PERFECT, Agreement.PERFECT)

    none_votes = sum(1 for a in anns if a.intro is None)
    if 2 * none_votes > n:
        grade = Agreement.PERFECT if none_votes == n else Agreement.MAJORITY
        return GoldLabel(doc.episode_id, None, grade, grade)

    spans = [a.intro for a in anns if a.intro is not None]
    starts = [s.start for s in spans]
    end_words = [s.end - 1 for s in spans]  # compare last-word positions, not exclusive ends

    start_cluster, start_grade = _winning_cluster(starts, doc, n, tolerance_ms, tolerance_tokens)
    end_cluster, end_grade = _winning_cluster(end_words, doc, n, tolerance_ms, tolerance_tokens)

    if start_cluster is None or end_cluster is None:
        return GoldLabel(doc.episode_id, None, start_grade, end_grade)

    gold_start = median_low(sorted(start_cluster))
    gold_end = median_low(sorted(end_cluster)) + 1
    if gold_start >= gold_end:
        # Pathological cross-annotator medians; no usable range.
        return GoldLabel(doc.episode_id, None, Agreement.NONE, Agreement.NONE)
    return GoldLabel(doc.episode_id, TokenRange(gold_start, gold_end), start_grade, end_grade)


def resolve_gold_corpus(
    docs: Iterable[TranscriptDoc],
    tolerance_ms: int = DEFAULT_TOLERANCE_MS,
    tolerance_tokens: int = DEFAULT_TOLERANCE_TOKENS,
) -> list[GoldLabel]:
    """resolve_gold over every document that has at least one annotation."""
    return [
        resolve_gold(doc, tolerance_ms, tolerance_tokens)
        for doc in docs
        if doc.annotations
    ]


def agreement_report(
    docs: Sequence[TranscriptDoc],
    tolerance_ms: int = DEFAULT_TOLERANCE_MS,
    tolerance_tokens: int = DEFAULT_TOLERANCE_TOKENS,
) -> AgreementReport:
    """Bucket multi-annotated documents (>= 3 annotations) by agreement grade."""
    if not docs:
        raise CorpusError("agreement report over an empty corpus")
    start_eps: dict[Agreement, list[str]] = {a: [] for a in Agreement}
    end_eps: dict[Agreement, list[str]] = {a: [] for a in Agreement}
    total = 0
    for doc in docs:
        if len(doc.annotations) < 3:
            continue
        total += 1
        gold = resolve_gold(doc, tolerance_ms, tolerance_tokens)
        start_eps[gold.start_agreement].append(doc.episode_id)
        end_eps[gold.end_agreement].append(doc.episode_id)
    return AgreementReport(
        start_counts={a: len(start_eps[a]) for a in Agreement},
        end_counts={a: len(end_eps[a]) for a in Agreement},
        start_episodes={a: tuple(start_eps[a]) for a in Agreement},
        end_episodes={a: tuple(end_eps[a]) for a in Agreement},
        multi_annotated=total,
    )


def intro_labels(doc: TranscriptDoc, gold: GoldLabel) -> list[bool]:
    """Per-token Is-intro labels for a document under its gold range."""
    flags = [False] * len(doc)
    if gold.intro is not None:
        for i in range(gold.intro.start, gold.intro.end):
            flags[i] = True
    return flags
