"""Dataset ingestion, truncation, and sampling.

A dataset is a UTF-8 JSONL file, one record per line:

    {"id": str, "source": str, "summary": str, "meta": {str: str}}

Records are immutable, keep file order, and are safe to share across
threads. ``summary`` may be empty for inference-only records.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Mapping

from .errors import DatasetFormatError
from .rng import SplitMix64

_REQUIRED = ("id", "source", "summary")
_TOKEN_RUN = re.compile(r"\S+")


@dataclass(frozen=True)
class DocumentPair:
    """A source document plus its reference summary."""

    id: str
    source: str
    summary: str
    meta: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Dataset:
    records: tuple[DocumentPair, ...]
    name: str = ""

    def __iter__(self) -> Iterator[DocumentPair]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, i: int) -> DocumentPair:
        return self.records[i]

    def by_id(self) -> dict[str, DocumentPair]:
        return {doc.id: doc for doc in self.records}


def _parse_record(obj, lineno: int) -> DocumentPair:
    if not isinstance(obj, dict):
        raise DatasetFormatError(f"line {lineno}: record is not an object", line=lineno)
    for key in _REQUIRED:
        if key not in obj:
            raise DatasetFormatError(
                f"line {lineno}: missing required field {key!r}", line=lineno
            )
        if not isinstance(obj[key], str):
            raise DatasetFormatError(
                f"line {lineno}: field {key!r} must be a string", line=lineno
            )
    if not obj["source"]:
        raise DatasetFormatError(f"line {lineno}: empty source", line=lineno)
    meta = obj.get("meta", {})
    if not isinstance(meta, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in meta.items()
    ):
        raise DatasetFormatError(
            f"line {lineno}: meta must map strings to strings", line=lineno
        )
    return DocumentPair(id=obj["id"], source=obj["source"], summary=obj["summary"], meta=meta)


def load_dataset(path: str | Path, format: str = "jsonl") -> Dataset:
    """Load a dataset file; records come back in file order.

    Raises DatasetFormatError (with the offending line number) for a
    malformed line, a missing/ill-typed field, or a duplicate id.
    """
    if format != "jsonl":
        raise ValueError(f"unsupported dataset format {format!r}")
    path = Path(path)
    records: list[DocumentPair] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                raise DatasetFormatError(f"line {lineno}: blank line", line=lineno)
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(
                    f"line {lineno}: invalid JSON ({exc.msg})", line=lineno
                ) from exc
            rec = _parse_record(obj, lineno)
            if rec.id in seen:
                raise DatasetFormatError(
                    f"line {lineno}: duplicate id {rec.id!r}", line=lineno
                )
            seen.add(rec.id)
            records.append(rec)
    return Dataset(tuple(records), name=path.stem)


def record_to_json(doc: DocumentPair) -> str:
    """Canonical single-line serialization; fixed key order, UTF-8 verbatim."""
    return json.dumps(
        {"id": doc.id, "source": doc.source, "summary": doc.summary, "meta": dict(doc.meta)},
        ensure_ascii=False,
    )


def save_dataset(ds: Dataset, path: str | Path) -> None:
    """Write the canonical JSONL form; save(load(f)) is byte-identical for
    files that were produced by save."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in ds:
            fh.write(record_to_json(doc) + "\n")


def truncate_document(doc: DocumentPair, max_tokens: int) -> DocumentPair:
    """Keep at most max_tokens whitespace-delimited source tokens.

    Truncation is a prefix of the original source string, so character
    offsets into the truncated text remain valid for the original.
    Idempotent; the summary is never touched.
    """
    if max_tokens <= 0:
        raise ValueError("max_tokens must be positive")
    count = 0
    cut = None
    for m in _TOKEN_RUN.finditer(doc.source):
        count += 1
        if count == max_tokens:
            cut = m.end()
        elif count > max_tokens:
            return replace(doc, source=doc.source[:cut])
    return doc


def sample_subset(ds: Dataset, n: int, seed: int) -> Dataset:
    """Deterministic order-preserving sample of exactly n records.

    Uses selection sampling (Knuth's Algorithm S) driven by SplitMix64,
    so the same (ds, n, seed) picks the same records on every platform.
    """
    if n > len(ds):
        raise ValueError(f"cannot sample {n} records from a dataset of {len(ds)}")
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = SplitMix64(seed)
    picked: list[DocumentPair] = []
    needed = n
    pool = len(ds)
    for rec in ds.records:
        if needed == 0:
            break
        if rng.random() * pool < needed:
            picked.append(rec)
            needed -= 1
        pool -= 1
    return Dataset(tuple(picked), name=ds.name)
