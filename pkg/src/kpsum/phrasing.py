"""Text segmentation into tokens and non-overlapping spans.

Three granularities are supported:

* ``word`` — every word-kind token is its own span;
* ``phrase`` — maximal runs of consecutive word-kind tokens, with
  stopwords and punctuation acting as delimiters;
* ``sentence`` — token runs bounded by sentence breaks, stopwords kept
  inside (punctuation tokens are never part of a span).

Span text is normalized for matching: lowercased, member tokens joined
by single spaces. Character offsets always refer to the original text.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

_TOKEN_RUN = re.compile(r"\S+")
_CLOSING = "\"'”’)]}"
_OPENING = "\"'“‘([{"


class TokenKind(Enum):
    WORD = "word"
    PUNCT = "punctuation"
    STOPWORD = "stopword"


class Granularity(str, Enum):
    WORD = "word"
    PHRASE = "phrase"
    SENTENCE = "sentence"


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int
    kind: TokenKind


@dataclass(frozen=True)
class PhraseSpan:
    """A contiguous, ordered run of tokens with normalized surface text.

    Stopword-kind tokens appear only in sentence-granularity spans;
    punctuation-kind tokens never do.
    """

    tokens: tuple[Token, ...]
    start: int
    end: int
    text: str


def _span_from(tokens: Sequence[Token]) -> PhraseSpan:
    toks = tuple(tokens)
    text = " ".join(t.text for t in toks).lower()
    return PhraseSpan(tokens=toks, start=toks[0].start, end=toks[-1].end, text=text)


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Read a stopword file: one lowercase token per line, UTF-8."""
    words = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word:
                words.append(word.lower())
    return frozenset(words)


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset[str]:
    """The English stopword list shipped with the package."""
    text = resources.files("kpsum.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str, stopwords: Iterable[str] | None = None) -> list[Token]:
    """Split text into word / punctuation / stopword tokens.

    Punctuation at the edges of a whitespace-delimited run is split into
    one-character tokens; punctuation embedded between other characters
    stays inside the token, so "404,500" and "don't" survive intact.
    A token is word-kind iff it contains an alphanumeric character, and
    stopword-kind if additionally its lowercased text is in the list.
    """
    stop = default_stopwords() if stopwords is None else frozenset(
        w.lower() for w in stopwords
    )
    tokens: list[Token] = []
    for m in _TOKEN_RUN.finditer(text):
        run, base = m.group(), m.start()
        i, j = 0, len(run)
        while i < j and _is_punct(run[i]):
            i += 1
        while j > i and _is_punct(run[j - 1]):
            j -= 1
        core = run[i:j]
        if core and any(ch.isalnum() for ch in core):
            for k in range(i):
                tokens.append(Token(run[k], base + k, base + k + 1, TokenKind.PUNCT))
            kind = TokenKind.STOPWORD if core.lower() in stop else TokenKind.WORD
            tokens.append(Token(core, base + i, base + j, kind))
            for k in range(j, len(run)):
                tokens.append(Token(run[k], base + k, base + k + 1, TokenKind.PUNCT))
        else:
            for k, ch in enumerate(run):
                tokens.append(Token(ch, base + k, base + k + 1, TokenKind.PUNCT))
    return tokens


def sentence_ranges(text: str) -> list[tuple[int, int]]:
    """Character ranges of sentences.

    A break happens at a newline, or after terminal punctuation (. ! ?)
    plus optional closing quotes when whitespace and then an uppercase
    letter or opening quote follow. No abbreviation handling.
    """
    ranges: list[tuple[int, int]] = []
    n = len(text)
    start = 0
    i = 0
    while i < n:
        ch = text[i]
        if ch == "\n":
            ranges.append((start, i))
            i += 1
            start = i
            continue
        if ch in ".!?":
            j = i + 1
            while j < n and text[j] in _CLOSING:
                j += 1
            k = j
            while k < n and text[k] in " \t":
                k += 1
            if k > j and k < n and (text[k].isupper() or text[k] in _OPENING):
                ranges.append((start, j))
                start = k
                i = k
                continue
            i = j
            continue
        i += 1
    if start < n:
        ranges.append((start, n))
    return [(s, e) for s, e in ranges if text[s:e].strip()]


def segment(
    text: str,
    granularity: Granularity = Granularity.PHRASE,
    stopwords: Iterable[str] | None = None,
) -> list[PhraseSpan]:
    """Segment text into ordered, non-overlapping spans. Pure and deterministic."""
    granularity = Granularity(granularity)
    tokens = tokenize(text, stopwords)
    if granularity is Granularity.WORD:
        return [_span_from([t]) for t in tokens if t.kind is TokenKind.WORD]
    if granularity is Granularity.PHRASE:
        spans: list[PhraseSpan] = []
        run: list[Token] = []
        for tok in tokens:
            if tok.kind is TokenKind.WORD:
                run.append(tok)
            elif run:
                spans.append(_span_from(run))
                run = []
        if run:
            spans.append(_span_from(run))
        return spans
    # sentence granularity: word and stopword tokens, grouped by sentence
    spans = []
    kept = [t for t in tokens if t.kind is not TokenKind.PUNCT]
    idx = 0
    for s, e in sentence_ranges(text):
        group: list[Token] = []
        while idx < len(kept) and kept[idx].start < e:
            if kept[idx].start >= s:
                group.append(kept[idx])
            idx += 1
        if group:
            spans.append(_span_from(group))
    return spans
