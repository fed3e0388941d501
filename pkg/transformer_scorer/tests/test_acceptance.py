"""Acceptance gate for the scorer package, one printed PASS/FAIL per criterion.

The emitted score files must interoperate with the downstream segmentation
toolkit: they are validated here with that toolkit's own import routine, and
the span-merge rule is cross-checked against its chunker on real model
output.
"""

import torch
from transformers import AutoModelForTokenClassification, AutoTokenizer

import introseg.chunker as primary_chunker
from introseg.corpus import load_corpus as primary_load_corpus
from introseg.scorer import import_scores as primary_import_scores

from transformer_scorer.cli import main
from transformer_scorer.data import read_corpus, read_gold, read_split
from transformer_scorer.emit import score_spans
from transformer_scorer.train import FineTuneConfig, finetune


def check(name, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'}: {name}"
    if detail:
        line += f" [{detail}]"
    print(line)
    assert ok, line


def test_smoke_finetune_decreasing_loss(base_model_dir, fixture_files, tmp_path):
    episodes = read_corpus(fixture_files["corpus"])
    golds = read_gold(fixture_files["gold"])
    split = read_split(fixture_files["split"])
    cfg = FineTuneConfig(
        base_model=base_model_dir, epochs=2, learning_rate=1e-3,
        max_len=16, overlap=4, batch_size=2, seed=5,
    )
    losses = finetune(episodes, golds, split["train"], cfg, tmp_path / "ckpt")
    check(
        "2-epoch smoke fine-tune completes with decreasing loss",
        len(losses) == 2 and losses[1] < losses[0],
        f"losses {losses[0]:.4f} -> {losses[1]:.4f}",
    )


def test_emitted_scores_pass_primary_validation_and_merge_rule(base_model_dir, fixture_files, tmp_path):
    ckpt = tmp_path / "ckpt"
    assert main([
        "finetune", "--corpus", fixture_files["corpus"], "--gold", fixture_files["gold"],
        "--split", fixture_files["split"], "--out", str(ckpt), "--base-model", base_model_dir,
        "--epochs", "2", "--lr", "1e-3", "--max-len", "16", "--overlap", "4",
        "--batch-size", "2", "--seed", "5",
    ]) == 0
    scores_path = tmp_path / "scores.jsonl"
    assert main(["emit-scores", "--ckpt", str(ckpt), "--corpus", fixture_files["corpus"],
                 "-o", str(scores_path)]) == 0

    corpus_docs = primary_load_corpus(fixture_files["corpus"])
    sequences = primary_import_scores(scores_path, corpus_docs)
    imported = {s.episode_id: s for s in sequences}
    check(
        "emit-scores output passes the toolkit's score-file validation",
        set(imported) == {"ep-a", "ep-b", "ep-c"}
        and all(len(imported[d.episode_id]) == len(d.tokens) for d in corpus_docs),
        f"{len(sequences)} episodes validated",
    )

    # overlap-region scores must match the toolkit's own max-context merge
    tokenizer = AutoTokenizer.from_pretrained(ckpt)
    model = AutoModelForTokenClassification.from_pretrained(ckpt)
    model.eval()
    episodes = read_corpus(fixture_files["corpus"])
    worst = 0.0
    multi_span = 0
    for episode in episodes:
        spans = score_spans(model, tokenizer, episode, max_len=16, overlap=4, device=torch.device("cpu"))
        if len(spans) > 1:
            multi_span += 1
        primary_windows = [
            (primary_chunker.SpanWindow(s.word_start, s.word_end - s.word_start), scores)
            for s, scores in spans
        ]
        reference = primary_chunker.merge(len(episode.words), primary_windows)
        emitted = imported[episode.episode_id].scores
        worst = max(worst, max(abs(a - b) for a, b in zip(reference, emitted)))
    check(
        "overlap-region merged scores match the toolkit chunker rule within 1e-6",
        multi_span >= 2 and worst <= 1e-6,
        f"{multi_span} multi-span episodes, max deviation {worst:.2e}",
    )
