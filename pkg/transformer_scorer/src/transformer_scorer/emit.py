"""Turn a fine-tuned checkpoint into word-level score files."""

from __future__ import annotations

import logging
from pathlib import Path

import torch
from transformers import AutoModelForTokenClassification, AutoTokenizer

from .data import Episode, build_spans, merge_spans, tokenize_words, write_scores
from .train import load_checkpoint_config

log = logging.getLogger(__name__)

NEUTRAL_SCORE = 0.5  # words whose tokenization yields no subwords


def score_spans(model, tokenizer, episode: Episode, max_len: int, overlap: int, device):
    """Per-span word scores: subword class-1 probabilities pooled by mean.

    Words with zero subwords score a neutral 0.5 with a warning. Returns
    (span, word score list) pairs covering the whole episode.
    """
    pieces = tokenize_words(tokenizer, episode.words)
    counts = [len(p) for p in pieces]
    empty_words = [i for i, c in enumerate(counts) if c == 0]
    if empty_words:
        log.warning(
            "%s: %d word(s) tokenize to zero subwords; assigning %.1f",
            episode.episode_id,
            len(empty_words),
            NEUTRAL_SCORE,
        )
    scored_spans = []
    for span in build_spans(counts, max_len - 2, overlap):
        ids = [tokenizer.cls_token_id]
        for w in range(span.word_start, span.word_end):
            ids.extend(tokenizer.convert_tokens_to_ids(pieces[w]))
        ids.append(tokenizer.sep_token_id)
        batch = torch.tensor([ids], dtype=torch.long, device=device)
        with torch.no_grad():
            logits = model(input_ids=batch).logits[0]
        probs = torch.softmax(logits, dim=-1)[:, 1].tolist()
        word_scores = []
        cursor = 1  # skip [CLS]
        for w in range(span.word_start, span.word_end):
            n = counts[w]
            if n == 0:
                word_scores.append(NEUTRAL_SCORE)
            else:
                word_scores.append(sum(probs[cursor : cursor + n]) / n)
                cursor += n
        scored_spans.append((span, word_scores))
    return scored_spans


def score_episode(model, tokenizer, episode: Episode, max_len: int, overlap: int, device) -> list[float]:
    """Merged word-level probabilities (maximum-minimum-context over spans)."""
    scored = score_spans(model, tokenizer, episode, max_len, overlap, device)
    return merge_spans(len(episode.words), scored)


def emit_scores(
    ckpt_dir: str | Path,
    episodes: list[Episode],
    out_path: str | Path,
    device: str = "cpu",
    max_len: int | None = None,
    overlap: int | None = None,
) -> None:
    """Score every episode and write the toolkit's JSONL score format.

    Span geometry defaults to the checkpoint's config echo so scoring uses
    the same windows the model was trained on.
    """
    echo = load_checkpoint_config(ckpt_dir)
    max_len = max_len if max_len is not None else int(echo.get("max_len", 512))
    overlap = overlap if overlap is not None else int(echo.get("overlap", 128))
    tokenizer = AutoTokenizer.from_pretrained(ckpt_dir)
    model = AutoModelForTokenClassification.from_pretrained(ckpt_dir)
    dev = torch.device(device)
    model.to(dev)
    model.eval()

    rows = []
    for episode in episodes:
        scores = score_episode(model, tokenizer, episode, max_len, overlap, dev)
        rows.append((episode.episode_id, [min(1.0, max(0.0, s)) for s in scores]))
    write_scores(out_path, rows)
