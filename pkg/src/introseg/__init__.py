"""Toolkit for locating episode introductions in ASR podcast transcripts."""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    Agreement,
    Annotation,
    GoldLabel,
    Token,
    TokenRange,
    TranscriptDoc,
    load_corpus,
    resolve_gold,
)
from .scorer import ScoreSequence, import_scores  # noqa: F401
from .boundary import BoundaryConfig, SegmentPrediction, detect  # noqa: F401
from .evaluation import overlap_score  # noqa: F401
