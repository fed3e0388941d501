import json

import pytest
import torch
from transformers import BertConfig, BertForTokenClassification, BertTokenizer

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "welcome", "to", "the", "show", "today", "we", "talk", "about",
    "play", "##ing", "##s", "music", "news", "guest", "host",
    "episode", "intro", "body", "and", "now", "this", "is",
]

# word streams built from the tiny vocabulary; "playing" fans out to two
# subwords, "​" tokenizes to zero subwords
EPISODES = {
    "ep-a": {
        "intro": (4, 12),
        "words": ["the", "show", "body", "music"] * 1
        + ["welcome", "to", "the", "show", "today", "we", "talk", "about"]
        + ["body", "music", "news", "and", "now", "playing", "music", "body"] * 3,
    },
    "ep-b": {
        "intro": (2, 8),
        "words": ["body", "music"]
        + ["welcome", "to", "this", "episode", "intro", "today"]
        + ["news", "and", "playing", "body"] * 5,
    },
    "ep-c": {
        "intro": None,
        "words": ["body", "music", "news", "​", "and", "now", "playing"] * 4,
    },
}


@pytest.fixture(scope="session")
def base_model_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("tiny_base")
    vocab_file = path / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(str(vocab_file))
    tokenizer.save_pretrained(path)
    torch.manual_seed(7)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
        num_labels=2,
    )
    BertForTokenClassification(config).save_pretrained(path)
    return str(path)


@pytest.fixture(scope="session")
def fixture_files(tmp_path_factory):
    """Corpus, gold, and split files in the toolkit's wire formats."""
    path = tmp_path_factory.mktemp("fixture")
    corpus_lines = []
    gold_lines = []
    for eid, spec in EPISODES.items():
        corpus_lines.append(json.dumps({
            "episode_id": eid,
            "program_id": "progX",
            "tokens": [{"text": w} for w in spec["words"]],
            "annotations": [],
        }))
        intro = spec["intro"]
        gold_lines.append(json.dumps({
            "episode_id": eid,
            "intro": {"start": intro[0], "end": intro[1]} if intro else None,
            "start_agreement": "perfect",
            "end_agreement": "perfect",
        }))
    (path / "corpus.jsonl").write_text("\n".join(corpus_lines) + "\n", encoding="utf-8")
    (path / "gold.jsonl").write_text("\n".join(gold_lines) + "\n", encoding="utf-8")
    split = {
        "train": ["ep-a", "ep-b"],
        "seen_test": ["ep-c"],
        "seen_val": [],
        "unseen_test": [],
        "unseen_val": [],
        "seed": 0,
    }
    (path / "split.json").write_text(json.dumps(split) + "\n", encoding="utf-8")
    return {
        "dir": path,
        "corpus": str(path / "corpus.jsonl"),
        "gold": str(path / "gold.jsonl"),
        "split": str(path / "split.json"),
    }
