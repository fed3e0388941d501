"""Fine-tune a pretrained bidirectional encoder for per-token intro scoring."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
from torch.utils.data import DataLoader
from transformers import (
    AutoModelForTokenClassification,
    AutoTokenizer,
    get_linear_schedule_with_warmup,
)

from .data import DataError, Episode, GoldSpan, build_spans, tokenize_words

log = logging.getLogger(__name__)

CONFIG_FILE = "finetune_config.json"


@dataclass(frozen=True)
class FineTuneConfig:
    base_model: str = "bert-base-uncased"
    epochs: int = 300
    learning_rate: float = 2e-5
    warmup_frac: float = 0.1
    max_len: int = 512
    overlap: int = 128
    batch_size: int = 4
    seed: int = 0
    device: str = "cpu"

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.learning_rate <= 0 or self.batch_size < 1:
            raise DataError("epochs, learning_rate, and batch_size must be positive")
        if not 0.0 <= self.warmup_frac <= 1.0:
            raise DataError("warmup_frac must lie in [0, 1]")
        if self.max_len < 4 or not 0 <= self.overlap < self.max_len - 2:
            raise DataError("need max_len >= 4 and 0 <= overlap < max_len - 2")


def span_examples(tokenizer, episode: Episode, gold: GoldSpan, cfg: FineTuneConfig):
    """One training example per span: input ids plus per-subword labels.

    Word labels follow the gold range; every subword inherits its word's
    label; [CLS]/[SEP] carry the ignore label.
    """
    pieces = tokenize_words(tokenizer, episode.words)
    counts = [len(p) for p in pieces]
    word_labels = [
        1 if gold.start is not None and gold.start <= i < gold.end else 0
        for i in range(len(episode.words))
    ]
    examples = []
    for span in build_spans(counts, cfg.max_len - 2, cfg.overlap):
        ids = [tokenizer.cls_token_id]
        labels = [-100]
        for w in range(span.word_start, span.word_end):
            piece_ids = tokenizer.convert_tokens_to_ids(pieces[w])
            ids.extend(piece_ids)
            labels.extend([word_labels[w]] * len(piece_ids))
        ids.append(tokenizer.sep_token_id)
        labels.append(-100)
        examples.append({"input_ids": ids, "labels": labels})
    return examples


def _collate(pad_id: int):
    def collate(batch):
        width = max(len(ex["input_ids"]) for ex in batch)
        input_ids, labels, attention = [], [], []
        for ex in batch:
            pad = width - len(ex["input_ids"])
            input_ids.append(ex["input_ids"] + [pad_id] * pad)
            labels.append(ex["labels"] + [-100] * pad)
            attention.append([1] * len(ex["input_ids"]) + [0] * pad)
        return {
            "input_ids": torch.tensor(input_ids, dtype=torch.long),
            "labels": torch.tensor(labels, dtype=torch.long),
            "attention_mask": torch.tensor(attention, dtype=torch.long),
        }

    return collate


def finetune(
    episodes: list[Episode],
    golds: dict[str, GoldSpan],
    train_ids: set[str],
    cfg: FineTuneConfig,
    out_dir: str | Path,
) -> list[float]:
    """Train a token-classification head over the encoder; returns epoch losses.

    Only training-split episodes with a usable gold label contribute spans.
    The checkpoint directory receives the model, the tokenizer, and a config
    echo with the loss history.
    """
    torch.manual_seed(cfg.seed)
    tokenizer = AutoTokenizer.from_pretrained(cfg.base_model)
    model = AutoModelForTokenClassification.from_pretrained(cfg.base_model, num_labels=2)
    device = torch.device(cfg.device)
    model.to(device)

    examples = []
    for episode in episodes:
        if episode.episode_id not in train_ids:
            continue
        gold = golds.get(episode.episode_id)
        if gold is None or not gold.usable or not episode.words:
            continue
        examples.extend(span_examples(tokenizer, episode, gold, cfg))
    if not examples:
        raise DataError("training split is empty (no episodes with usable gold labels)")

    generator = torch.Generator().manual_seed(cfg.seed)
    loader = DataLoader(
        examples,
        batch_size=cfg.batch_size,
        shuffle=True,
        generator=generator,
        collate_fn=_collate(tokenizer.pad_token_id),
    )
    optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.learning_rate)
    total_steps = cfg.epochs * len(loader)
    scheduler = get_linear_schedule_with_warmup(
        optimizer, int(cfg.warmup_frac * total_steps), total_steps
    )

    model.train()
    losses = []
    for epoch in range(cfg.epochs):
        total = 0.0
        batches = 0
        for batch in loader:
            batch = {k: v.to(device) for k, v in batch.items()}
            out = model(**batch)
            out.loss.backward()
            optimizer.step()
            scheduler.step()
            optimizer.zero_grad()
            total += float(out.loss.detach())
            batches += 1
        losses.append(total / batches)
        log.info("epoch %d/%d loss %.6f", epoch + 1, cfg.epochs, losses[-1])

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    echo = asdict(cfg)
    echo["losses"] = losses
    echo["n_spans"] = len(examples)
    (out_dir / CONFIG_FILE).write_text(json.dumps(echo, indent=2) + "\n", encoding="utf-8")
    return losses


def load_checkpoint_config(ckpt_dir: str | Path) -> dict:
    path = Path(ckpt_dir) / CONFIG_FILE
    if not path.exists():
        return {}
    return json.loads(path.read_text(encoding="utf-8"))
