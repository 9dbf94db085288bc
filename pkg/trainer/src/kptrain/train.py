"""Training loop with recall-based checkpoint selection.

Validation never re-implements selection or metrics: after each epoch
the trainer exports validation logits and shells out to the extraction
pipeline's CLI (extract + oracle + eval) to compute keyphrase recall@K,
keeping a single source of truth for those semantics. The checkpoint
with the highest validation recall wins (earliest epoch on ties).
"""

from __future__ import annotations

import json
import logging
import math
import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path

import torch

from .align import align_labels
from .export import export_logits
from .loss import token_salience_loss
from .model import TokenClassifier
from .records import read_dataset, read_training_records
from .subwords import encode

log = logging.getLogger(__name__)


@dataclass
class TrainerConfig:
    datasets: tuple[str, ...]  # training-record JSONL files (one, or several mixed)
    out_dir: str
    val_records: str | None = None  # dataset JSONL with summaries
    lambda_neg: float = 0.1
    epochs: int = 10
    max_subword_len: int = 512
    lr: float = 1e-3
    batch_size: int = 8
    seed: int = 0
    vocab_size: int = 4096
    d_model: int = 64
    nhead: int = 4
    layers: int = 2
    ff_dim: int = 128
    chunk_chars: int = 4
    window: int = 512
    recall_k: int = 20
    epsilon: float = 0.7
    granularity: str = "phrase"
    kpsum_cmd: tuple[str, ...] = (sys.executable, "-m", "kpsum")

    def __post_init__(self):
        if not 0.0 < self.lambda_neg <= 1.0:
            raise ValueError("lambda_neg must be in (0, 1]")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")

    def model_kwargs(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "d_model": self.d_model,
            "nhead": self.nhead,
            "layers": self.layers,
            "ff_dim": self.ff_dim,
            "seed": self.seed,
        }


def featurize(records, cfg: TrainerConfig):
    """Per-record (ids, labels, mask), truncated to max_subword_len."""
    features = []
    for rec in records:
        subs, ids = encode(rec["text"], cfg.chunk_chars, cfg.vocab_size)
        labels, mask = align_labels(rec, subs)
        n = min(len(ids), cfg.max_subword_len)
        features.append((ids[:n], labels[:n], mask[:n]))
    return features


def _batches(features, batch_size, generator):
    order = torch.randperm(len(features), generator=generator).tolist()
    for lo in range(0, len(order), batch_size):
        chunk = [features[i] for i in order[lo : lo + batch_size]]
        length = max(len(ids) for ids, _, _ in chunk)
        ids = torch.zeros(len(chunk), length, dtype=torch.long)
        labels = torch.zeros(len(chunk), length)
        mask = torch.zeros(len(chunk), length)
        pad = torch.ones(len(chunk), length, dtype=torch.bool)
        for row, (i_ids, i_labels, i_mask) in enumerate(chunk):
            n = len(i_ids)
            ids[row, :n] = torch.tensor(i_ids, dtype=torch.long)
            labels[row, :n] = torch.tensor(i_labels, dtype=torch.float)
            mask[row, :n] = torch.tensor(i_mask, dtype=torch.float)
            pad[row, :n] = False
        yield ids, labels, mask, pad


def _run_kpsum(cfg: TrainerConfig, args: list[str]) -> None:
    cmd = list(cfg.kpsum_cmd) + args
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(
            f"kpsum call failed ({' '.join(args[:2])}, exit {proc.returncode}):\n{proc.stderr}"
        )


def validation_recall(model: TokenClassifier, cfg: TrainerConfig, work: Path, epoch: int) -> float:
    """Export validation logits and score recall@K through the kpsum CLI."""
    val_docs = read_dataset(cfg.val_records)
    logits_path = work / f"epoch{epoch:03d}_logits.jsonl"
    export_logits(model, val_docs, logits_path, cfg.chunk_chars, cfg.window)
    oracle_path = work / "oracle.jsonl"
    if not oracle_path.exists():
        _run_kpsum(cfg, [
            "oracle", "--dataset", str(cfg.val_records), "--mode", "source",
            "--granularity", cfg.granularity, "--out", str(oracle_path),
        ])
    pred_path = work / f"epoch{epoch:03d}_pred.jsonl"
    _run_kpsum(cfg, [
        "extract", "--dataset", str(cfg.val_records), "--scorer", "external",
        "--scores", str(logits_path), "--k", str(cfg.recall_k),
        "--epsilon", str(cfg.epsilon), "--granularity", cfg.granularity,
        "--out", str(pred_path),
    ])
    report_path = work / f"epoch{epoch:03d}_report.json"
    _run_kpsum(cfg, [
        "eval", "--dataset", str(cfg.val_records), "--keyphrases", str(pred_path),
        "--oracle", str(oracle_path), "--k-list", str(cfg.recall_k),
        "--epsilon", str(cfg.epsilon), "--report", str(report_path),
    ])
    report = json.loads(report_path.read_text(encoding="utf-8"))
    return float(report["recall_at_k"][str(cfg.recall_k)]["recall"])


def save_checkpoint(model: TokenClassifier, cfg: TrainerConfig, path: Path) -> None:
    path.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), path / "model.pt")
    (path / "model_config.json").write_text(
        json.dumps(
            {
                "vocab_size": cfg.vocab_size,
                "d_model": cfg.d_model,
                "nhead": cfg.nhead,
                "layers": cfg.layers,
                "ff_dim": cfg.ff_dim,
                "chunk_chars": cfg.chunk_chars,
                "window": cfg.window,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )


def load_checkpoint(path: str | Path) -> tuple[TokenClassifier, dict]:
    path = Path(path)
    meta = json.loads((path / "model_config.json").read_text(encoding="utf-8"))
    model = TokenClassifier(
        vocab_size=meta["vocab_size"],
        d_model=meta["d_model"],
        nhead=meta["nhead"],
        layers=meta["layers"],
        ff_dim=meta["ff_dim"],
    )
    model.load_state_dict(torch.load(path / "model.pt", weights_only=True))
    model.eval()
    return model, meta


def train(cfg: TrainerConfig) -> Path:
    """Train, select the best checkpoint by validation recall, return its path.

    Without val_records the last epoch is kept. The training curve goes
    to out_dir/history.json; a non-finite loss aborts with diagnostics.
    """
    torch.manual_seed(cfg.seed)
    records = []
    for path in cfg.datasets:
        records.extend(read_training_records(path))
    if not records:
        raise ValueError("no training records found")
    features = featurize(records, cfg)
    model = TokenClassifier(**cfg.model_kwargs())
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr)
    out_dir = Path(cfg.out_dir)
    work = out_dir / "work"
    work.mkdir(parents=True, exist_ok=True)
    history = []
    best_epoch = None
    best_recall = -1.0
    best_state = None
    for epoch in range(1, cfg.epochs + 1):
        model.train()
        generator = torch.Generator().manual_seed(cfg.seed + epoch)
        epoch_loss = 0.0
        for step, (ids, labels, mask, pad) in enumerate(
            _batches(features, cfg.batch_size, generator)
        ):
            optimizer.zero_grad()
            logits = model(ids, pad_mask=pad)
            loss = token_salience_loss(logits, labels, mask, cfg.lambda_neg)
            value = float(loss.detach())
            if not math.isfinite(value):
                raise RuntimeError(
                    f"non-finite loss {value} at epoch {epoch} step {step}; "
                    f"lr={cfg.lr} batch_size={cfg.batch_size}"
                )
            loss.backward()
            optimizer.step()
            epoch_loss += value
        entry = {"epoch": epoch, "loss": epoch_loss}
        if cfg.val_records is not None:
            recall = validation_recall(model, cfg, work, epoch)
            entry["recall"] = recall
            if recall > best_recall:
                best_recall = recall
                best_epoch = epoch
                best_state = {k: v.clone() for k, v in model.state_dict().items()}
        history.append(entry)
        log.info("epoch %d: loss=%.4f recall=%s", epoch, epoch_loss, entry.get("recall"))
    if best_state is None:  # no validation: keep the final weights
        best_epoch = cfg.epochs
        best_state = model.state_dict()
        best_recall = None
    model.load_state_dict(best_state)
    checkpoint = out_dir / "checkpoint"
    save_checkpoint(model, cfg, checkpoint)
    (out_dir / "history.json").write_text(
        json.dumps(history, indent=2) + "\n", encoding="utf-8"
    )
    (out_dir / "best.json").write_text(
        json.dumps({"epoch": best_epoch, "recall": best_recall}, indent=2) + "\n",
        encoding="utf-8",
    )
    return checkpoint
