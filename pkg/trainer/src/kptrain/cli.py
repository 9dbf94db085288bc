"""Minimal trainer CLI: train from a JSON config, or export logits."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .export import export_logits
from .records import read_dataset
from .train import TrainerConfig, load_checkpoint, train


def _load_config(path: str) -> TrainerConfig:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    data["datasets"] = tuple(data["datasets"])
    if "kpsum_cmd" in data:
        data["kpsum_cmd"] = tuple(data["kpsum_cmd"])
    return TrainerConfig(**data)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="kptrain")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train and select a checkpoint by recall@K")
    p_train.add_argument("--config", required=True, help="TrainerConfig JSON file")

    p_export = sub.add_parser("export", help="export per-word logits for a dataset")
    p_export.add_argument("--checkpoint", required=True)
    p_export.add_argument("--dataset", required=True)
    p_export.add_argument("--out", required=True)
    p_export.add_argument("--window", type=int, default=512)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    if args.command == "train":
        checkpoint = train(_load_config(args.config))
        print(f"best checkpoint: {checkpoint}")
        return 0
    model, meta = load_checkpoint(args.checkpoint)
    count = export_logits(
        model,
        read_dataset(args.dataset),
        args.out,
        chunk_chars=meta["chunk_chars"],
        window=args.window,
    )
    print(f"exported logits for {count} documents to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
