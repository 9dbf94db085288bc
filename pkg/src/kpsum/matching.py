"""Character-level fuzzy matching, salience labels, and oracle keyphrases.

The similarity score between two phrase strings is

    fuzz(a, b) = |LCS(a, b)| / max(|a|, |b|)

where LCS is the longest common *subsequence* of the character
sequences (not the longest substring). Matching always happens on
normalized text (lowercased); offsets always refer to the original
document. A source phrase is salient when its best score against any
summary phrase reaches the threshold epsilon.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import Dataset, DocumentPair
from .phrasing import Granularity, PhraseSpan, segment

log = logging.getLogger(__name__)

# Phrases longer than this are truncated for scoring only; bounds the
# O(len*len) DP. Real phrases are far shorter.
SCORING_MAX_CHARS = 256

_lcs_cache: dict[tuple, int] = {}
_LCS_CACHE_MAX = 1 << 16


@dataclass(frozen=True)
class MatchConfig:
    """Fuzzy-matching threshold epsilon in (0, 1]."""

    epsilon: float = 0.7

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in (0, 1], got {self.epsilon}")


@dataclass(frozen=True)
class LabeledPhrase:
    span: PhraseSpan
    label: int
    best_match_score: float
    best_match_index: int | None


def lcs_length(a: Sequence, b: Sequence) -> int:
    """Length of the longest common subsequence of two sequences.

    Symmetric, and never larger than the shorter input. Accepts strings
    (compared per character) or tuples of hashable items.
    """
    key = (a, b) if len(a) <= len(b) else (b, a)
    hit = _lcs_cache.get(key)
    if hit is not None:
        return hit
    value = _lcs(*key)
    if len(_lcs_cache) >= _LCS_CACHE_MAX:
        _lcs_cache.clear()
    _lcs_cache[key] = value
    return value


def _lcs(short: Sequence, long: Sequence) -> int:
    if not short or not long:
        return 0
    prev = [0] * (len(short) + 1)
    for item in long:
        cur = [0]
        best = 0
        for j, other in enumerate(short, start=1):
            if item == other:
                val = prev[j - 1] + 1
            else:
                val = prev[j] if prev[j] > best else best
            cur.append(val)
            best = val
        prev = cur
    return prev[-1]


def _normalize(text: str) -> str:
    return text.lower()[:SCORING_MAX_CHARS]


def fuzz(a: str, b: str) -> float:
    """Character-level LCS similarity in [0, 1] on lowercased text."""
    if not a and not b:
        raise ValueError("fuzz is undefined for two empty strings")
    na, nb = _normalize(a), _normalize(b)
    denom = max(len(na), len(nb))
    if denom == 0:
        raise ValueError("fuzz is undefined for two empty strings")
    return lcs_length(na, nb) / denom


def _best_match(
    text: str, candidates: Sequence[str], lengths: Sequence[int]
) -> tuple[float, int | None]:
    """Exact max fuzz of text over candidates with the earliest argmax.

    Skips the DP whenever the length-ratio upper bound cannot beat the
    best score seen so far; ties keep the earlier index.
    """
    na = _normalize(text)
    la = len(na)
    best = 0.0
    best_i: int | None = None
    for i, (nb, lb) in enumerate(zip(candidates, lengths)):
        denom = la if la > lb else lb
        if denom == 0:
            continue
        if best_i is not None and min(la, lb) / denom <= best:
            continue
        score = lcs_length(na, nb) / denom
        if best_i is None or score > best:
            best, best_i = score, i
    return best, best_i


def label_phrases(
    source_phrases: Sequence[PhraseSpan],
    summary_phrases: Sequence[PhraseSpan],
    cfg: MatchConfig,
) -> list[LabeledPhrase]:
    """Attach max-over-summary fuzz scores and thresholded labels.

    Output order equals input order. With no summary phrases every label
    is 0 with score 0 and no match index.
    """
    summary_norm = [_normalize(q.text) for q in summary_phrases]
    summary_len = [len(q) for q in summary_norm]
    out = []
    for p in source_phrases:
        score, idx = _best_match(p.text, summary_norm, summary_len)
        label = 1 if (idx is not None and score >= cfg.epsilon) else 0
        out.append(LabeledPhrase(span=p, label=label, best_match_score=score, best_match_index=idx))
    return out


def emit_training_records(
    ds: Dataset,
    granularity: Granularity,
    cfg: MatchConfig,
    out: str | Path,
    stopwords=None,
) -> int:
    """Write one labeled training record per document as JSONL.

    Record shape: {"id": str, "text": str, "phrases": [{"start", "end",
    "label"}]}. Documents with an empty summary are skipped with a
    warning; the return value counts records actually written.
    """
    written = 0
    skipped = 0
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        for doc in ds:
            if not doc.summary.strip():
                skipped += 1
                log.warning("skipping %s: empty summary", doc.id)
                continue
            labeled = label_phrases(
                segment(doc.source, granularity, stopwords),
                segment(doc.summary, granularity, stopwords),
                cfg,
            )
            rec = {
                "id": doc.id,
                "text": doc.source,
                "phrases": [
                    {"start": lp.span.start, "end": lp.span.end, "label": lp.label}
                    for lp in labeled
                ],
            }
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
            written += 1
    if skipped:
        log.warning("skipped %d document(s) with empty summaries", skipped)
    return written


def load_training_records(path: str | Path) -> list[dict]:
    """Read back records written by emit_training_records."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return records


def oracle_keyphrases(
    doc: DocumentPair,
    granularity: Granularity = Granularity.PHRASE,
    stopwords=None,
) -> list[PhraseSpan]:
    """Best-matching source phrase for each summary phrase.

    Ties go to the earliest source position; duplicate source spans are
    kept once (first mapping wins). Empty summary gives an empty list.
    """
    source_phrases = segment(doc.source, granularity, stopwords)
    summary_phrases = segment(doc.summary, granularity, stopwords)
    if not source_phrases or not summary_phrases:
        return []
    source_norm = [_normalize(p.text) for p in source_phrases]
    source_len = [len(p) for p in source_norm]
    picked: list[PhraseSpan] = []
    seen: set[tuple[int, int]] = set()
    for q in summary_phrases:
        _, idx = _best_match(q.text, source_norm, source_len)
        if idx is None:
            continue
        span = source_phrases[idx]
        key = (span.start, span.end)
        if key not in seen:
            seen.add(key)
            picked.append(span)
    return picked


def external_oracle_keyphrases(
    doc: DocumentPair,
    granularity: Granularity = Granularity.PHRASE,
    cfg: MatchConfig = MatchConfig(),
    stopwords=None,
) -> list[PhraseSpan]:
    """Summary phrases with no epsilon-level match anywhere in the source.

    The returned spans reference *summary* character offsets.
    """
    source_phrases = segment(doc.source, granularity, stopwords)
    summary_phrases = segment(doc.summary, granularity, stopwords)
    source_norm = [_normalize(p.text) for p in source_phrases]
    source_len = [len(p) for p in source_norm]
    out = []
    for q in summary_phrases:
        score, _ = _best_match(q.text, source_norm, source_len)
        if score < cfg.epsilon:
            out.append(q)
    return out
