"""Synthetic labeled corpora with planted introductions.

Episodes are streams of body-vocabulary tokens with one contiguous planted
intro whose tokens come mostly from a disjoint intro vocabulary. Difficulty
is dialable: ``vocab_mix`` bleeds body words into the intro, ``noise_prob``
corrupts tokens anywhere (an ASR-error surrogate), and ``no_intro_prob``
yields episodes without an intro. Word timings are synthesized at a constant
speech rate. Everything is deterministic given the seed.

Because real pretrained vectors may not be available where the pipeline is
exercised, :func:`random_embeddings` builds a seeded Gaussian embedding
table over an arbitrary vocabulary in the standard text format.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import Agreement, Annotation, GoldLabel, Token, TokenRange, TranscriptDoc
from .scorer import EmbeddingTable


class SynthError(ValueError):
    pass


def _default_body_vocab() -> tuple[str, ...]:
    return tuple(f"body{i:03d}" for i in range(100))


def _default_intro_vocab() -> tuple[str, ...]:
    return tuple(f"intro{i:02d}" for i in range(50))


@dataclass(frozen=True)
class SynthConfig:
    programs: int = 20
    episodes_per_program: int = 10
    body_vocab: tuple[str, ...] = field(default_factory=_default_body_vocab)
    intro_vocab: tuple[str, ...] = field(default_factory=_default_intro_vocab)
    body_weights: tuple[float, ...] | None = None
    intro_weights: tuple[float, ...] | None = None
    vocab_mix: float = 0.0  # fraction of intro tokens drawn from the body vocabulary
    # intro boundaries sit >= 60 tokens from either episode edge so detection
    # windows up to the default k=50 can recover them
    intro_start_range: tuple[int, int] = (60, 150)
    intro_len_range: tuple[int, int] = (60, 120)
    episode_len_range: tuple[int, int] = (400, 600)
    no_intro_prob: float = 0.0
    noise_prob: float = 0.0
    seed: int = 0
    tokens_per_second: float = 3.5

    def __post_init__(self) -> None:
        if self.programs < 1 or self.episodes_per_program < 1:
            raise SynthError("programs and episodes_per_program must be positive")
        if not self.body_vocab or not self.intro_vocab:
            raise SynthError("vocabularies must be non-empty")
        if set(self.body_vocab) & set(self.intro_vocab):
            raise SynthError("body and intro vocabularies must be disjoint")
        for name in ("intro_start_range", "intro_len_range", "episode_len_range"):
            lo, hi = getattr(self, name)
            if lo < 0 or lo > hi:
                raise SynthError(f"{name} must be a non-empty range, got ({lo}, {hi})")
        if self.intro_len_range[0] < 1:
            raise SynthError("intro_len_range must allow at least one token")
        if self.intro_start_range[1] + self.intro_len_range[1] > self.episode_len_range[0]:
            raise SynthError(
                "intro_start_range + intro_len_range must fit inside the shortest episode"
            )
        if not 0.0 <= self.vocab_mix <= 1.0:
            raise SynthError("vocab_mix must lie in [0, 1]")
        if not 0.0 <= self.no_intro_prob <= 1.0:
            raise SynthError("no_intro_prob must lie in [0, 1]")
        if not 0.0 <= self.noise_prob < 1.0:
            raise SynthError("noise_prob must lie in [0, 1)")
        if self.tokens_per_second <= 0:
            raise SynthError("tokens_per_second must be positive")
        for weights, vocab in ((self.body_weights, self.body_vocab), (self.intro_weights, self.intro_vocab)):
            if weights is not None and len(weights) != len(vocab):
                raise SynthError("sampling weights must match their vocabulary length")

    @classmethod
    def from_dict(cls, obj: dict) -> "SynthConfig":
        kwargs = dict(obj)
        for name in ("body_vocab", "intro_vocab", "body_weights", "intro_weights"):
            if kwargs.get(name) is not None:
                kwargs[name] = tuple(kwargs[name])
        for name in ("intro_start_range", "intro_len_range", "episode_len_range"):
            if name in kwargs:
                lo, hi = kwargs[name]
                kwargs[name] = (int(lo), int(hi))
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise SynthError(f"bad synth config: {exc}") from exc


def _normalized(weights: Sequence[float] | None, size: int) -> np.ndarray | None:
    if weights is None:
        return None
    arr = np.asarray(weights, dtype=np.float64)
    total = arr.sum()
    if total <= 0:
        raise SynthError("sampling weights must sum to a positive value")
    return arr / total


def generate(cfg: SynthConfig) -> tuple[list[TranscriptDoc], list[GoldLabel]]:
    """Generate the corpus and its gold labels (one trusted annotation each)."""
    rng = np.random.default_rng(cfg.seed)
    body = list(cfg.body_vocab)
    intro_words = list(cfg.intro_vocab)
    union = body + intro_words
    body_p = _normalized(cfg.body_weights, len(body))
    intro_p = _normalized(cfg.intro_weights, len(intro_words))
    ms_per_token = 1000.0 / cfg.tokens_per_second

    docs: list[TranscriptDoc] = []
    golds: list[GoldLabel] = []
    for p in range(cfg.programs):
        program_id = f"prog{p:03d}"
        for e in range(cfg.episodes_per_program):
            episode_id = f"{program_id}-ep{e:03d}"
            length = int(rng.integers(cfg.episode_len_range[0], cfg.episode_len_range[1] + 1))
            intro: TokenRange | None = None
            if rng.random() >= cfg.no_intro_prob:
                start = int(rng.integers(cfg.intro_start_range[0], cfg.intro_start_range[1] + 1))
                width = int(rng.integers(cfg.intro_len_range[0], cfg.intro_len_range[1] + 1))
                intro = TokenRange(start, start + width)

            texts = [str(w) for w in rng.choice(body, size=length, p=body_p)]
            if intro is not None:
                for i in range(intro.start, intro.end):
                    if rng.random() < cfg.vocab_mix:
                        texts[i] = str(rng.choice(body, p=body_p))
                    else:
                        texts[i] = str(rng.choice(intro_words, p=intro_p))
            if cfg.noise_prob > 0.0:
                noisy = rng.random(length) < cfg.noise_prob
                for i in np.flatnonzero(noisy):
                    texts[i] = union[int(rng.integers(0, len(union)))]

            tokens = tuple(
                Token(
                    text=texts[i],
                    index=i,
                    start_ms=round(i * ms_per_token),
                    end_ms=round((i + 1) * ms_per_token),
                )
                for i in range(length)
            )
            docs.append(
                TranscriptDoc(
                    episode_id=episode_id,
                    program_id=program_id,
                    tokens=tokens,
                    annotations=(Annotation(annotator_id="synth", intro=intro),),
                )
            )
            golds.append(GoldLabel(episode_id, intro, Agreement.PERFECT, Agreement.PERFECT))
    return docs, golds


def random_embeddings(vocab: Iterable[str], dim: int = 100, seed: int = 0) -> EmbeddingTable:
    """Seeded standard-normal vector per vocabulary entry.

    Unit-variance coordinates keep gradient-descent training fast at the
    default learning rate.
    """
    if dim < 1:
        raise SynthError("embedding dim must be positive")
    rng = np.random.default_rng(seed)
    vectors = {}
    for token in sorted(set(vocab)):
        vectors[token] = rng.standard_normal(dim)
    if not vectors:
        raise SynthError("empty vocabulary for embeddings")
    return EmbeddingTable(dim=dim, vectors=vectors)
