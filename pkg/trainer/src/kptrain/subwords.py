"""Deterministic subword segmentation with character offsets.

Words are whitespace runs with leading/trailing punctuation stripped;
a core must contain at least one alphanumeric character (embedded
punctuation like "404,500" survives). This mirrors the word-token rule
of the logits consumer, so exported per-word spans land exactly on its
token boundaries. Each word core is chopped into fixed-size character
chunks, and chunks map to embedding ids via a stable hash, so there is
no vocabulary file and no platform drift.
"""

from __future__ import annotations

import hashlib
import re
import unicodedata
from dataclasses import dataclass

_RUN = re.compile(r"\S+")


@dataclass(frozen=True)
class Subword:
    text: str
    start: int
    end: int
    word_index: int


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def word_spans(text: str) -> list[tuple[int, int]]:
    """Character spans of word cores, in document order."""
    spans = []
    for m in _RUN.finditer(text):
        run, base = m.group(), m.start()
        i, j = 0, len(run)
        while i < j and _is_punct(run[i]):
            i += 1
        while j > i and _is_punct(run[j - 1]):
            j -= 1
        core = run[i:j]
        if core and any(ch.isalnum() for ch in core):
            spans.append((base + i, base + j))
    return spans


def subword_spans(text: str, chunk_chars: int = 4) -> list[Subword]:
    """Chop every word core into chunks of at most chunk_chars characters."""
    if chunk_chars < 1:
        raise ValueError("chunk_chars must be >= 1")
    out = []
    for w, (start, end) in enumerate(word_spans(text)):
        for pos in range(start, end, chunk_chars):
            stop = min(pos + chunk_chars, end)
            out.append(Subword(text=text[pos:stop], start=pos, end=stop, word_index=w))
    return out


def subword_id(piece: str, vocab_size: int) -> int:
    """Stable hash of a lowercased chunk into [0, vocab_size)."""
    digest = hashlib.blake2b(piece.lower().encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % vocab_size


def encode(text: str, chunk_chars: int = 4, vocab_size: int = 4096):
    """Subwords plus their embedding ids for one document."""
    subs = subword_spans(text, chunk_chars)
    ids = [subword_id(s.text, vocab_size) for s in subs]
    return subs, ids
