"""Command surface wiring corpus, scorer, boundary, and evaluation stages.

Every subcommand is a pure function of its inputs, flags, and seed;
environment variables are never consulted. Outputs are written atomically,
and each output artifact is accompanied by a ``<path>.manifest.json``
recording the command, configuration, inputs, and toolkit version (the
manifest's timing fields are the only non-reproducible bytes).
"""

from __future__ import annotations

import argparse
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, augment, boundary, chunker, corpus, evaluation, scorer, splitter, synth
from .fileio import atomic_write_text, read_json, write_json


def _manifest(
    command: str,
    args: argparse.Namespace,
    inputs: list[str],
    outputs: list[str],
    seed: int | None,
    started: float,
) -> None:
    """Write one manifest next to the command's primary output."""
    if not outputs:
        return
    config = {
        key: value
        for key, value in sorted(vars(args).items())
        if key not in {"func", "command"} and not key.startswith("_")
    }
    payload = {
        "command": command,
        "config": {k: (str(v) if isinstance(v, Path) else v) for k, v in config.items()},
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "seed": seed,
        "toolkit_version": __version__,
        "duration_s": round(time.perf_counter() - started, 6),
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    write_json(str(outputs[0]) + ".manifest.json", payload)


def _read_manifest_config(artifact_path: str) -> dict:
    path = Path(str(artifact_path) + ".manifest.json")
    if not path.exists():
        return {}
    try:
        obj = read_json(path)
    except ValueError:
        return {}
    return obj.get("config", {}) if isinstance(obj, dict) else {}


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got '{text}'") from exc


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------


def cmd_validate(args: argparse.Namespace) -> int:
    docs = corpus.load_corpus(args.corpus)
    n_tokens = sum(len(d) for d in docs)
    print(f"ok: {len(docs)} documents, {n_tokens} tokens")
    return 0


def cmd_agreement(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    docs = corpus.load_corpus(args.corpus)
    report = corpus.agreement_report(docs, args.tolerance_ms, args.tolerance_tokens)
    payload = report.to_dict()
    outputs = []
    if args.output:
        write_json(args.output, payload)
        outputs.append(args.output)
    else:
        import json

        print(json.dumps(payload, indent=2))
    if args.figures_dir:
        from . import figures

        outputs.append(str(figures.agreement_figure(report, Path(args.figures_dir) / "agreement.png")))
    _manifest("agreement", args, [args.corpus], outputs, None, started)
    return 0


def cmd_gold(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    docs = corpus.load_corpus(args.corpus)
    golds = corpus.resolve_gold_corpus(docs, args.tolerance_ms, args.tolerance_tokens)
    corpus.save_gold(golds, args.output)
    skipped = sum(1 for d in docs if not d.annotations)
    print(f"wrote {len(golds)} gold labels to {args.output}" + (f" ({skipped} unannotated skipped)" if skipped else ""))
    _manifest("gold", args, [args.corpus], [args.output], None, started)
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    docs = corpus.load_corpus(args.corpus)
    fracs = args.fracs or [0.05, 0.05, 0.10, 0.10]
    if len(fracs) != 4:
        raise splitter.SplitError("--fracs needs four values: unseen_test,unseen_val,seen_test,seen_val")
    spec = splitter.SplitSpec(
        unseen_test_frac=fracs[0],
        unseen_val_frac=fracs[1],
        seen_test_frac=fracs[2],
        seen_val_frac=fracs[3],
        seed=args.seed,
    )
    split = splitter.split_corpus(docs, spec)
    write_json(args.output, split.to_manifest())
    sizes = ", ".join(f"{name}={len(split.bucket(name))}" for name in splitter.DatasetSplit.BUCKETS)
    print(f"wrote split manifest to {args.output} ({sizes})")
    _manifest("split", args, [args.corpus], [args.output], args.seed, started)
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    cfg = synth.SynthConfig.from_dict(read_json(args.config)) if args.config else synth.SynthConfig()
    docs, _golds = synth.generate(cfg)
    corpus.save_corpus(docs, args.output)
    outputs = [args.output]
    if args.embeddings_out:
        table = synth.random_embeddings(
            list(cfg.body_vocab) + list(cfg.intro_vocab), dim=args.embedding_dim, seed=cfg.seed
        )
        scorer.save_embeddings(table, args.embeddings_out)
        outputs.append(args.embeddings_out)
    print(f"wrote {len(docs)} synthetic episodes to {args.output}")
    _manifest("synth", args, [args.config] if args.config else [], outputs, cfg.seed, started)
    return 0


def cmd_augment(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    docs = corpus.load_corpus(args.corpus)
    cfg = augment.AugmentConfig(
        strategy=augment.Strategy(args.strategy),
        copies_per_doc=args.copies,
        edit_prob=args.p,
        seed=args.seed,
        min_len=args.min_len,
    )
    forbidden: set[str] = set()
    if args.split:
        split = splitter.DatasetSplit.from_manifest(read_json(args.split))
        forbidden = set(split.held_out)
        docs = [d for d in docs if d.episode_id in split.train]
    aug_docs, _ = augment.augment_corpus(docs, cfg, forbidden_ids=forbidden)
    corpus.save_corpus(aug_docs, args.output)
    print(f"wrote {len(aug_docs)} augmented episodes to {args.output}")
    inputs = [args.corpus] + ([args.split] if args.split else [])
    _manifest("augment", args, inputs, [args.output], args.seed, started)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    docs = corpus.load_corpus(args.corpus)
    if args.gold:
        golds = corpus.load_gold(args.gold)
    else:
        golds = {g.episode_id: g for g in corpus.resolve_gold_corpus(docs)}
    if args.split:
        split = splitter.DatasetSplit.from_manifest(read_json(args.split))
        docs = [d for d in docs if d.episode_id in split.train]
        if not docs:
            raise scorer.TrainError("split manifest leaves no training documents in this corpus")
    table = scorer.load_embeddings(args.embeddings)
    cfg = scorer.TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        l2=args.l2,
        seed=args.seed,
        class_weighting=args.class_weighting,
    )
    model = scorer.train_logistic(docs, golds, table, cfg)
    scorer.save_model(model, cfg, args.output)
    print(f"trained on {len(docs)} documents; model written to {args.output}")
    inputs = [args.corpus, args.embeddings] + [p for p in (args.split, args.gold) if p]
    _manifest("train", args, inputs, [args.output], args.seed, started)
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    docs = corpus.load_corpus(args.corpus)
    model, _ = scorer.load_model(args.model)
    table = scorer.load_embeddings(args.embeddings)
    chunk_cfg = chunker.ChunkConfig(max_len=args.max_len, overlap=args.overlap)
    sequences = scorer.score_corpus(docs, model, table, chunk_cfg)
    scorer.save_scores(sequences, args.output)
    print(f"scored {len(sequences)} episodes to {args.output}")
    _manifest("score", args, [args.corpus, args.model, args.embeddings], [args.output], None, started)
    return 0


def cmd_segment(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    sequences = scorer.load_score_file(args.scores)
    cfg = boundary.BoundaryConfig(k=args.k, enforce_order=args.enforce_order, min_peak=args.min_peak)
    predictions = []
    for seq in sequences:
        try:
            predictions.append(boundary.detect(seq, cfg))
        except boundary.BoundaryError as exc:
            raise boundary.BoundaryError(f"episode {seq.episode_id}: {exc}") from exc
    boundary.save_predictions(predictions, args.output)
    print(f"segmented {len(predictions)} episodes to {args.output}")
    _manifest("segment", args, [args.scores], [args.output], None, started)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    golds = corpus.load_gold(args.gold)
    keep: set[str] | None = None
    if args.split or args.bucket:
        if not (args.split and args.bucket):
            raise evaluation.EvalError("--split and --bucket must be given together")
        split = splitter.DatasetSplit.from_manifest(read_json(args.split))
        keep = set(split.bucket(args.bucket))
        golds = {eid: g for eid, g in golds.items() if eid in keep}
        if not golds:
            raise evaluation.EvalError(f"no gold labels fall in bucket '{args.bucket}'")

    offsets = tuple(args.offsets or evaluation.DEFAULT_OFFSETS)
    run_files = [args.predictions] + list(args.runs or [])
    runs = []
    for path in run_files:
        predictions = boundary.load_predictions(path)
        if keep is not None:
            predictions = {eid: p for eid, p in predictions.items() if eid in keep}
        runs.append(evaluation.offset_accuracy(predictions, golds, offsets))

    k = args.k
    if k is None:
        config = _read_manifest_config(args.predictions)
        k = config.get("k")
    report = evaluation.aggregate_runs(runs, k=k, scorer=args.scorer)

    write_json(args.output, report.to_dict())
    out_base = Path(args.output)
    table_path = out_base.with_suffix(".txt")
    csv_path = out_base.with_name(out_base.stem + "_overlaps.csv")
    text_table = evaluation.render_text_table(report)
    atomic_write_text(table_path, text_table)
    atomic_write_text(csv_path, evaluation.overlaps_csv(runs))
    print(text_table, end="")

    outputs = [args.output, str(table_path), str(csv_path)]
    if args.figures_dir:
        from . import figures

        fig_dir = Path(args.figures_dir)
        outputs.append(str(figures.accuracy_vs_offset_figure(report, fig_dir / "accuracy_vs_offset.png")))
        all_overlaps = [v for run in runs for v in run.overlaps.values()]
        outputs.append(str(figures.overlap_distribution_figure(all_overlaps, fig_dir / "overlap_distribution.png")))
    inputs = run_files + [args.gold] + ([args.split] if args.split else [])
    _manifest("evaluate", args, inputs, outputs, None, started)
    return 0


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="introseg",
        description="Locate episode introductions in ASR podcast transcripts.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a corpus file against the schema")
    p.add_argument("corpus")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("agreement", help="annotator agreement report over multi-annotated episodes")
    p.add_argument("corpus")
    p.add_argument("--tolerance-ms", type=int, default=corpus.DEFAULT_TOLERANCE_MS)
    p.add_argument("--tolerance-tokens", type=int, default=corpus.DEFAULT_TOLERANCE_TOKENS)
    p.add_argument("-o", "--output", default=None, help="write JSON here instead of stdout")
    p.add_argument("--figures-dir", default=None, help="also render an agreement bar chart")
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("gold", help="resolve gold labels from annotations")
    p.add_argument("corpus")
    p.add_argument("--tolerance-ms", type=int, default=corpus.DEFAULT_TOLERANCE_MS)
    p.add_argument("--tolerance-tokens", type=int, default=corpus.DEFAULT_TOLERANCE_TOKENS)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gold)

    p = sub.add_parser("split", help="program-stratified train/test/validation split")
    p.add_argument("corpus")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument(
        "--fracs",
        type=_float_list,
        default=None,
        help="unseen_test,unseen_val,seen_test,seen_val (default 0.05,0.05,0.10,0.10)",
    )
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--config", default=None, help="JSON file of generator settings")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--embeddings-out", default=None, help="also write seeded random embeddings here")
    p.add_argument("--embedding-dim", type=int, default=100)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("augment", help="expand training data with label-aligned perturbations")
    p.add_argument("corpus")
    p.add_argument("--strategy", choices=[s.value for s in augment.Strategy], required=True)
    p.add_argument("--copies", type=int, default=5)
    p.add_argument("--p", type=float, default=0.15, help="edit probability")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--min-len", type=int, default=2, help="resample copies shorter than this")
    p.add_argument("--split", default=None, help="split manifest; only train episodes are augmented")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", help="train the logistic scorer over static embeddings")
    p.add_argument("corpus")
    p.add_argument("--split", default=None, help="split manifest; train on its train bucket")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--gold", default=None, help="gold JSONL (default: resolve from annotations)")
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--class-weighting", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score a corpus with a trained model")
    p.add_argument("corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--max-len", type=int, default=512)
    p.add_argument("--overlap", type=int, default=128)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("segment", help="detect intro boundaries from a score file")
    p.add_argument("scores")
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--no-enforce-order", dest="enforce_order", action="store_false")
    p.add_argument("--min-peak", type=float, default=None)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("evaluate", help="score predictions against gold labels")
    p.add_argument("predictions")
    p.add_argument("--gold", required=True)
    p.add_argument("--offsets", type=_int_list, default=None, help="default 0,1,3,5,9")
    p.add_argument("--runs", nargs="+", default=None, help="additional prediction files to aggregate")
    p.add_argument("--split", default=None, help="split manifest for bucket filtering")
    p.add_argument("--bucket", default=None, choices=list(splitter.DatasetSplit.BUCKETS))
    p.add_argument("--k", type=int, default=None, help="window size to echo in the report")
    p.add_argument("--scorer", default=None, help="scorer identity to echo in the report")
    p.add_argument("--figures-dir", default=None, help="render report figures into this directory")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_evaluate)

    return parser


INPUT_ERRORS = (
    corpus.CorpusError,
    chunker.ChunkError,
    scorer.EmbeddingError,
    scorer.ScoreFileError,
    scorer.TrainError,
    boundary.BoundaryError,
    augment.AugmentError,
    splitter.SplitError,
    synth.SynthError,
    evaluation.EvalError,
    OSError,
)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
