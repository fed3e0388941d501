"""Label-aligned training-data augmentation.

Two strategies expand a labeled corpus while keeping every output label
describing its output token:

* ``tfidfwr`` replaces tokens with probability decreasing in their TF-IDF
  score, drawing replacements from the corpus vocabulary biased toward
  low-information words. Length and labels are untouched.
* ``randaug`` applies one edit per copy, chosen uniformly: adjacent swaps,
  independent deletion, or a contiguous crop. Labels move in lockstep and
  the gold range is recomputed from the surviving label sequence.

Augmented copies are regular transcript documents whose episode_id gains a
``#aug<n>`` suffix and whose single annotation records the new gold range.
Only training material may be augmented; callers can pass the ids of
test/validation episodes to have them refused.
"""

from __future__ import annotations

import hashlib
import logging
import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import (
    Annotation,
    GoldLabel,
    Agreement,
    Token,
    TokenRange,
    TranscriptDoc,
    intro_labels,
    resolve_gold,
)

log = logging.getLogger(__name__)

MAX_RESAMPLES = 10


class AugmentError(ValueError):
    pass


class Strategy(str, Enum):
    TFIDF_REPLACE = "tfidfwr"
    RANDOM_EDIT = "randaug"


@dataclass(frozen=True)
class AugmentConfig:
    strategy: Strategy
    copies_per_doc: int = 5
    edit_prob: float = 0.15
    seed: int = 0
    min_len: int = 2  # copies shorter than this are resampled, then dropped

    def __post_init__(self) -> None:
        if self.copies_per_doc < 1:
            raise AugmentError("copies_per_doc must be positive")
        if not 0.0 < self.edit_prob < 1.0:
            raise AugmentError(f"edit_prob must lie in (0, 1), got {self.edit_prob}")
        if self.min_len < 1:
            raise AugmentError("min_len must be positive")


@dataclass(frozen=True)
class TfidfStats:
    """Corpus document frequencies: idf(t) = ln(doc_count / df(t))."""

    idf: dict[str, float]
    doc_count: int

    @property
    def max_idf(self) -> float:
        return max(self.idf.values()) if self.idf else 0.0

    def position_scores(self, doc: TranscriptDoc) -> np.ndarray:
        """TF-IDF per token position: (count in doc / doc length) * idf."""
        lowered = [tok.text.lower() for tok in doc.tokens]
        counts = Counter(lowered)
        n = len(lowered)
        return np.array([counts[t] / n * self.idf.get(t, 0.0) for t in lowered], dtype=np.float64)


def compute_tfidf(docs: Sequence[TranscriptDoc]) -> TfidfStats:
    """Document frequencies over lowercased tokens."""
    if not docs:
        raise AugmentError("cannot compute TF-IDF over an empty corpus")
    df: Counter[str] = Counter()
    for doc in docs:
        df.update({tok.text.lower() for tok in doc.tokens})
    d = len(docs)
    idf = {token: math.log(d / count) for token, count in df.items()}
    return TfidfStats(idf=idf, doc_count=d)


def doc_rng(seed: int, episode_id: str) -> np.random.Generator:
    """Per-document generator: stable mix of the run seed and the episode id."""
    digest = hashlib.sha256(f"{seed}:{episode_id}".encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def replacement_probabilities(doc: TranscriptDoc, stats: TfidfStats, edit_prob: float) -> np.ndarray:
    """Per-position replacement probability, decreasing in TF-IDF.

    Proportional to (max score in doc - score), scaled so the expected
    replacement fraction is ``edit_prob`` and capped at 1. A document whose
    scores are all equal falls back to a uniform ``edit_prob``.
    """
    z = stats.position_scores(doc)
    u = z.max() - z
    total = u.sum()
    if total <= 0.0:
        return np.full(len(z), edit_prob)
    return np.minimum(1.0, edit_prob * len(z) * u / total)


class _ReplacementSampler:
    """Samples replacement words ∝ (max_idf - idf): common words come back."""

    def __init__(self, stats: TfidfStats):
        self.vocab = sorted(stats.idf)
        if len(self.vocab) < 2:
            raise AugmentError(f"vocabulary of size {len(self.vocab)} is too small to replace from")
        weights = np.array([stats.max_idf - stats.idf[t] for t in self.vocab], dtype=np.float64)
        if weights.sum() <= 0.0:
            weights = np.ones(len(self.vocab))
        self.weights = weights
        self.index = {t: i for i, t in enumerate(self.vocab)}

    def draw(self, exclude: str, rng: np.random.Generator) -> str:
        probs = self.weights.copy()
        pos = self.index.get(exclude.lower())
        if pos is not None:
            probs[pos] = 0.0
        total = probs.sum()
        if total <= 0.0:
            probs = np.ones(len(self.vocab))
            if pos is not None:
                probs[pos] = 0.0
            total = probs.sum()
        return self.vocab[int(rng.choice(len(self.vocab), p=probs / total))]


def _rebuild(
    source: TranscriptDoc,
    copy_no: int,
    tokens: Sequence[Token],
    labels: Sequence[bool],
) -> tuple[TranscriptDoc, GoldLabel]:
    """Assemble an augmented copy; gold range = first..last Is-intro token."""
    episode_id = f"{source.episode_id}#aug{copy_no}"
    flagged = [i for i, is_intro in enumerate(labels) if is_intro]
    intro = TokenRange(flagged[0], flagged[-1] + 1) if flagged else None
    reindexed = tuple(
        Token(text=t.text, index=i, start_ms=t.start_ms, end_ms=t.end_ms)
        for i, t in enumerate(tokens)
    )
    doc = TranscriptDoc(
        episode_id=episode_id,
        program_id=source.program_id,
        tokens=reindexed,
        annotations=(Annotation(annotator_id="augment", intro=intro),),
    )
    gold = GoldLabel(episode_id, intro, Agreement.PERFECT, Agreement.PERFECT)
    return doc, gold


def tfidf_replace(
    doc: TranscriptDoc,
    labels: Sequence[bool],
    stats: TfidfStats,
    cfg: AugmentConfig,
    rng: np.random.Generator | None = None,
) -> list[tuple[TranscriptDoc, GoldLabel]]:
    """TF-IDF weighted word replacement; length and labels are preserved."""
    if cfg.strategy is not Strategy.TFIDF_REPLACE:
        raise AugmentError(f"tfidf_replace called with strategy {cfg.strategy.value}")
    if len(labels) != len(doc):
        raise AugmentError(f"{doc.episode_id}: {len(labels)} labels for {len(doc)} tokens")
    rng = rng if rng is not None else doc_rng(cfg.seed, doc.episode_id)
    sampler = _ReplacementSampler(stats)
    probs = replacement_probabilities(doc, stats, cfg.edit_prob)

    copies: list[tuple[TranscriptDoc, GoldLabel]] = []
    for copy_no in range(1, cfg.copies_per_doc + 1):
        mask = rng.random(len(doc)) < probs
        tokens = list(doc.tokens)
        for i in np.flatnonzero(mask):
            old = tokens[i]
            tokens[i] = Token(
                text=sampler.draw(old.text, rng),
                index=old.index,
                start_ms=old.start_ms,
                end_ms=old.end_ms,
            )
        copies.append(_rebuild(doc, copy_no, tokens, labels))
    return copies


def _swap(tokens: list[Token], labels: list[bool], n_swaps: int, rng: np.random.Generator) -> None:
    """Adjacent transpositions of (text, label); word timings stay in place."""
    n = len(tokens)
    for _ in range(n_swaps):
        j = int(rng.integers(0, n - 1))
        a, b = tokens[j], tokens[j + 1]
        tokens[j] = Token(text=b.text, index=a.index, start_ms=a.start_ms, end_ms=a.end_ms)
        tokens[j + 1] = Token(text=a.text, index=b.index, start_ms=b.start_ms, end_ms=b.end_ms)
        labels[j], labels[j + 1] = labels[j + 1], labels[j]


def _one_random_edit(
    doc: TranscriptDoc,
    labels: Sequence[bool],
    cfg: AugmentConfig,
    rng: np.random.Generator,
) -> tuple[list[Token], list[bool]]:
    n = len(doc)
    edit = ("swap", "delete", "crop")[int(rng.integers(0, 3))]
    tokens = list(doc.tokens)
    out_labels = list(labels)
    if edit == "swap":
        _swap(tokens, out_labels, math.ceil(cfg.edit_prob * n), rng)
    elif edit == "delete":
        keep = rng.random(n) >= cfg.edit_prob
        tokens = [t for t, k in zip(tokens, keep) if k]
        out_labels = [l for l, k in zip(out_labels, keep) if k]
    else:
        width = min(n, math.ceil(cfg.edit_prob * n))
        lo = int(rng.integers(0, n - width + 1))
        tokens = tokens[:lo] + tokens[lo + width :]
        out_labels = out_labels[:lo] + out_labels[lo + width :]
    return tokens, out_labels


def random_edit(
    doc: TranscriptDoc,
    labels: Sequence[bool],
    cfg: AugmentConfig,
    rng: np.random.Generator | None = None,
) -> list[tuple[TranscriptDoc, GoldLabel]]:
    """One uniformly chosen edit (swap / delete / crop) per copy.

    Degenerate copies (shorter than ``cfg.min_len``) are resampled up to
    ``MAX_RESAMPLES`` times and then dropped with a warning, so unlucky
    draws never crash a training run.
    """
    if cfg.strategy is not Strategy.RANDOM_EDIT:
        raise AugmentError(f"random_edit called with strategy {cfg.strategy.value}")
    if len(doc) < 2:
        raise AugmentError(f"{doc.episode_id}: need at least 2 tokens to edit")
    if len(labels) != len(doc):
        raise AugmentError(f"{doc.episode_id}: {len(labels)} labels for {len(doc)} tokens")
    rng = rng if rng is not None else doc_rng(cfg.seed, doc.episode_id)

    copies: list[tuple[TranscriptDoc, GoldLabel]] = []
    copy_no = 0
    for _ in range(cfg.copies_per_doc):
        produced = None
        for _attempt in range(MAX_RESAMPLES):
            tokens, out_labels = _one_random_edit(doc, labels, cfg, rng)
            if len(tokens) >= max(1, cfg.min_len):
                produced = (tokens, out_labels)
                break
        if produced is None:
            log.warning(
                "%s: dropped an augmented copy after %d degenerate draws",
                doc.episode_id,
                MAX_RESAMPLES,
            )
            continue
        copy_no += 1
        copies.append(_rebuild(doc, copy_no, produced[0], produced[1]))
    return copies


def augment_corpus(
    docs: Sequence[TranscriptDoc],
    cfg: AugmentConfig,
    golds: Mapping[str, GoldLabel] | None = None,
    stats: TfidfStats | None = None,
    forbidden_ids: Iterable[str] | None = None,
) -> tuple[list[TranscriptDoc], list[GoldLabel]]:
    """Augment every document with a usable gold label.

    ``forbidden_ids`` (typically the test/validation episode ids of a split
    manifest) make the corresponding documents an error to augment.
    Deterministic for a fixed (corpus, config): each document draws from its
    own seed stream, so document order and parallelism cannot change output.
    """
    forbidden = set(forbidden_ids or ())
    if golds is None:
        golds = {g.episode_id: g for g in (resolve_gold(d) for d in docs if d.annotations)}
    if cfg.strategy is Strategy.TFIDF_REPLACE and stats is None:
        stats = compute_tfidf(docs)

    out_docs: list[TranscriptDoc] = []
    out_golds: list[GoldLabel] = []
    for doc in docs:
        if doc.episode_id in forbidden:
            raise AugmentError(
                f"{doc.episode_id}: refusing to augment a test/validation episode"
            )
        gold = golds.get(doc.episode_id)
        if gold is None or not gold.usable:
            log.debug("%s: skipped (no usable gold label)", doc.episode_id)
            continue
        labels = intro_labels(doc, gold)
        if cfg.strategy is Strategy.TFIDF_REPLACE:
            copies = tfidf_replace(doc, labels, stats, cfg)
        else:
            if len(doc) < 2:
                log.debug("%s: skipped (too short to edit)", doc.episode_id)
                continue
            copies = random_edit(doc, labels, cfg)
        for aug_doc, aug_gold in copies:
            out_docs.append(aug_doc)
            out_golds.append(aug_gold)
    return out_docs, out_golds
