"""Readers for the JSONL wire formats shared with the extraction pipeline."""

from __future__ import annotations

import json
from pathlib import Path


def read_training_records(path: str | Path) -> list[dict]:
    """Training records: {"id": str, "text": str, "phrases": [{start, end, label}]}."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            for key in ("id", "text", "phrases"):
                if key not in rec:
                    raise ValueError(f"{path}:{lineno}: missing field {key!r}")
            records.append(rec)
    return records


def read_dataset(path: str | Path) -> list[dict]:
    """Dataset records: {"id": str, "source": str, "summary": str, ...}."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            for key in ("id", "source"):
                if key not in rec:
                    raise ValueError(f"{path}:{lineno}: missing field {key!r}")
            records.append(rec)
    return records
