"""Export per-word logits in the extraction pipeline's wire format.

Each word's logit is the mean of its constituent subword logits; spans
reference the original character offsets, so the consumer's alignment
step lands on its own token boundaries without snapping.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from .model import TokenClassifier
from .subwords import encode


def document_word_logits(
    model: TokenClassifier,
    text: str,
    chunk_chars: int = 4,
    window: int = 512,
) -> list[dict]:
    subs, ids = encode(text, chunk_chars, model.vocab_size)
    if not subs:
        return []
    logits = model.score_sequence(ids, window=window)
    by_word: dict[int, list[float]] = {}
    bounds: dict[int, tuple[int, int]] = {}
    for sub, logit in zip(subs, logits):
        by_word.setdefault(sub.word_index, []).append(logit)
        lo, hi = bounds.get(sub.word_index, (sub.start, sub.end))
        bounds[sub.word_index] = (min(lo, sub.start), max(hi, sub.end))
    rows = []
    for w in sorted(by_word):
        values = by_word[w]
        start, end = bounds[w]
        rows.append({"start": start, "end": end, "logit": sum(values) / len(values)})
    return rows


def export_logits(
    model: TokenClassifier,
    documents: Iterable[dict],
    out: str | Path,
    chunk_chars: int = 4,
    window: int = 512,
) -> int:
    """Write {"id", "tokens": [{"start", "end", "logit"}]} JSONL; returns
    the number of documents exported. ``documents`` are dataset records
    with "id" and "source"."""
    count = 0
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        for doc in documents:
            tokens = document_word_logits(model, doc["source"], chunk_chars, window)
            fh.write(json.dumps({"id": doc["id"], "tokens": tokens}, ensure_ascii=False) + "\n")
            count += 1
    return count
