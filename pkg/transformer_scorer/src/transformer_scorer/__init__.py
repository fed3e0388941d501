"""Transformer token-classification scorer emitting intro score files."""

__version__ = "0.1.0"

from .data import Episode, GoldSpan, build_spans, merge_spans, read_corpus, read_gold, read_split  # noqa: F401
from .emit import emit_scores, score_episode  # noqa: F401
from .train import FineTuneConfig, finetune  # noqa: F401
