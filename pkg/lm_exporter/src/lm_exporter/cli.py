"""CLI for the encoder exporter.

Subcommands: finetune-export (per-fold fine-tuning plus JSONL export) and
export-only (embeddings from an existing checkpoint). Flags mirror the
fine-tuning spec; epochs and batch size are required because no published
values exist for them.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from lm_exporter.config import ExporterError, FinetuneSpec
from lm_exporter.data import load_dataset, load_fold_plan
from lm_exporter.export import export_only, finetune_and_export


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lm-export", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("finetune-export", help="fine-tune per fold and export JSONL")
    p.add_argument("--sessions", required=True, help="directory of session JSON files")
    p.add_argument("--labels", help="labels CSV (falls back to session labels)")
    p.add_argument("--fold-plan", required=True, help="shared fold-plan JSON")
    p.add_argument("--model-id", required=True, help="model id written to the files")
    p.add_argument("--model-name", default="nghuyong/ernie-2.0-en")
    p.add_argument("--tiny", action="store_true",
                   help="small random-init encoder; no downloads (CI)")
    p.add_argument("--epochs", type=int, required=True)
    p.add_argument("--batch-size", type=int, required=True)
    p.add_argument("--learning-rate", type=float, default=2e-5)
    p.add_argument("--warmup-steps", type=int, default=50)
    p.add_argument("--weight-decay", type=float, default=0.1)
    p.add_argument("--max-seq-len", type=int, default=256)
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoints", help="directory to save per-fold checkpoints")
    p.add_argument("--out", required=True)

    p = sub.add_parser("export-only", help="embeddings from a saved checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--sessions", required=True)
    p.add_argument("--labels")
    p.add_argument("--model-id", required=True)
    p.add_argument("--max-seq-len", type=int, default=256)
    p.add_argument("--out", required=True)

    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        if args.command == "finetune-export":
            spec = FinetuneSpec(
                model_id=args.model_id,
                epochs=args.epochs,
                batch_size=args.batch_size,
                model_name=args.model_name,
                learning_rate=args.learning_rate,
                warmup_steps=args.warmup_steps,
                weight_decay=args.weight_decay,
                max_seq_len=args.max_seq_len,
                n_instances=args.instances,
                base_seed=args.seed,
                tiny=args.tiny,
            )
            dataset = load_dataset(
                Path(args.sessions), Path(args.labels) if args.labels else None
            )
            plan = load_fold_plan(Path(args.fold_plan))
            predictions, embeddings = finetune_and_export(
                dataset, spec, plan, Path(args.out),
                checkpoint_dir=Path(args.checkpoints) if args.checkpoints else None,
            )
            print(f"wrote {predictions} and {embeddings}", file=sys.stderr)
        else:
            dataset = load_dataset(
                Path(args.sessions), Path(args.labels) if args.labels else None
            )
            path = export_only(
                Path(args.checkpoint), dataset, args.model_id, Path(args.out),
                max_seq_len=args.max_seq_len,
            )
            print(f"wrote {path}", file=sys.stderr)
        return 0
    except ExporterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
