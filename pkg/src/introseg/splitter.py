"""Program-stratified corpus splitting.

Whole programs are held out for the unseen-program test and validation
sets; the remaining (seen) programs each contribute a fraction of their
episodes to the seen-program test and validation sets, keeping the rest for
training. No program identity ever crosses the seen/unseen frontier.

Shuffling uses numpy's PCG64 generator with an explicit seed, so a split is
reproducible across runs and platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import TranscriptDoc


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class SplitSpec:
    unseen_test_frac: float = 0.05
    unseen_val_frac: float = 0.05
    seen_test_frac: float = 0.10
    seen_val_frac: float = 0.10
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("unseen_test_frac", "unseen_val_frac", "seen_test_frac", "seen_val_frac"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise SplitError(f"{name} must lie in (0, 1), got {value}")
        if self.unseen_test_frac + self.unseen_val_frac >= 1.0:
            raise SplitError("unseen fractions must sum to less than 1")


@dataclass(frozen=True)
class DatasetSplit:
    train: frozenset[str]
    seen_test: frozenset[str]
    seen_val: frozenset[str]
    unseen_test: frozenset[str]
    unseen_val: frozenset[str]
    seed: int

    BUCKETS = ("train", "seen_test", "seen_val", "unseen_test", "unseen_val")

    def bucket(self, name: str) -> frozenset[str]:
        if name not in self.BUCKETS:
            raise SplitError(f"unknown split bucket '{name}'")
        return getattr(self, name)

    @property
    def held_out(self) -> frozenset[str]:
        """Everything that must never be trained or augmented on."""
        return self.seen_test | self.seen_val | self.unseen_test | self.unseen_val

    def to_manifest(self) -> dict:
        manifest: dict = {name: sorted(self.bucket(name)) for name in self.BUCKETS}
        manifest["seed"] = self.seed
        return manifest

    @classmethod
    def from_manifest(cls, obj: dict) -> "DatasetSplit":
        missing = [name for name in cls.BUCKETS if name not in obj]
        if missing:
            raise SplitError(f"split manifest missing buckets: {missing}")
        return cls(
            train=frozenset(obj["train"]),
            seen_test=frozenset(obj["seen_test"]),
            seen_val=frozenset(obj["seen_val"]),
            unseen_test=frozenset(obj["unseen_test"]),
            unseen_val=frozenset(obj["unseen_val"]),
            seed=int(obj.get("seed", 0)),
        )


def split_corpus(docs: Sequence[TranscriptDoc], spec: SplitSpec) -> DatasetSplit:
    """Split a corpus into the five disjoint buckets.

    Programs are shuffled by seed; ceil(frac * P) of them (at least one
    each) become unseen test / validation programs. Within every remaining
    program of at least 3 episodes, shuffled episodes go ceil(frac * E) to
    seen test, the same to seen validation, remainder to train; smaller
    programs go entirely to train.
    """
    programs: dict[str, list[str]] = {}
    for doc in docs:
        programs.setdefault(doc.program_id, []).append(doc.episode_id)
    p = len(programs)
    if p < 3:
        raise SplitError(f"need at least 3 distinct programs, found {p}")
    if not any(len(eps) >= 3 for eps in programs.values()):
        raise SplitError("need at least one program with 3 or more episodes")

    rng = np.random.default_rng(spec.seed)
    ordered_programs = sorted(programs)
    shuffled = [ordered_programs[i] for i in rng.permutation(p)]

    n_unseen_test = max(1, math.ceil(spec.unseen_test_frac * p))
    n_unseen_val = max(1, math.ceil(spec.unseen_val_frac * p))
    if n_unseen_test + n_unseen_val >= p:
        raise SplitError(
            f"unseen selection ({n_unseen_test} + {n_unseen_val} programs) leaves no seen programs"
        )
    unseen_test_programs = shuffled[:n_unseen_test]
    unseen_val_programs = shuffled[n_unseen_test : n_unseen_test + n_unseen_val]
    seen_programs = shuffled[n_unseen_test + n_unseen_val :]

    unseen_test = [eid for pid in unseen_test_programs for eid in programs[pid]]
    unseen_val = [eid for pid in unseen_val_programs for eid in programs[pid]]

    train: list[str] = []
    seen_test: list[str] = []
    seen_val: list[str] = []
    for pid in sorted(seen_programs):
        episodes = sorted(programs[pid])
        e = len(episodes)
        if e < 3:
            train.extend(episodes)
            continue
        order = [episodes[i] for i in rng.permutation(e)]
        n_test = math.ceil(spec.seen_test_frac * e)
        n_val = math.ceil(spec.seen_val_frac * e)
        # Keep at least one training episode per seen program.
        if n_test + n_val >= e:
            n_test = min(n_test, e - 1)
            n_val = max(0, e - n_test - 1)
        seen_test.extend(order[:n_test])
        seen_val.extend(order[n_test : n_test + n_val])
        train.extend(order[n_test + n_val :])

    return DatasetSplit(
        train=frozenset(train),
        seen_test=frozenset(seen_test),
        seen_val=frozenset(seen_val),
        unseen_test=frozenset(unseen_test),
        unseen_val=frozenset(unseen_val),
        seed=spec.seed,
    )
