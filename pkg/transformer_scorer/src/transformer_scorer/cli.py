"""Command surface: finetune a checkpoint, emit score files."""

from __future__ import annotations

import argparse
import sys

from .data import DataError, read_corpus, read_gold, read_split
from .emit import emit_scores
from .train import FineTuneConfig, finetune


def cmd_finetune(args: argparse.Namespace) -> int:
    episodes = read_corpus(args.corpus)
    golds = read_gold(args.gold)
    split = read_split(args.split)
    cfg = FineTuneConfig(
        base_model=args.base_model,
        epochs=args.epochs,
        learning_rate=args.lr,
        warmup_frac=args.warmup_frac,
        max_len=args.max_len,
        overlap=args.overlap,
        batch_size=args.batch_size,
        seed=args.seed,
        device=args.device,
    )
    losses = finetune(episodes, golds, split["train"], cfg, args.out)
    print(f"finetuned {cfg.epochs} epochs; final loss {losses[-1]:.6f}; checkpoint at {args.out}")
    return 0


def cmd_emit_scores(args: argparse.Namespace) -> int:
    episodes = read_corpus(args.corpus)
    emit_scores(
        args.ckpt,
        episodes,
        args.output,
        device=args.device,
        max_len=args.max_len,
        overlap=args.overlap,
    )
    print(f"wrote scores for {len(episodes)} episodes to {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transformer-scorer",
        description="Token-classification fine-tuning that emits intro score files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("finetune", help="fine-tune the encoder on a labeled corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.add_argument("--base-model", default="bert-base-uncased")
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--lr", type=float, default=2e-5)
    p.add_argument("--warmup-frac", type=float, default=0.1)
    p.add_argument("--max-len", type=int, default=512)
    p.add_argument("--overlap", type=int, default=128)
    p.add_argument("--batch-size", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--device", default="cpu")
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("emit-scores", help="score a corpus with a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--max-len", type=int, default=None, help="default: checkpoint config")
    p.add_argument("--overlap", type=int, default=None, help="default: checkpoint config")
    p.add_argument("--device", default="cpu")
    p.set_defaults(func=cmd_emit_scores)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
