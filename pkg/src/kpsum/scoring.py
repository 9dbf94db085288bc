"""Per-token salience scores from pluggable sources.

A :class:`TokenScoreMap` assigns one scalar to each word-kind token of a
document (char-offset keyed). Sources: externally produced logits files,
TextRank over a word co-occurrence graph, RAKE degree/frequency scores,
plus deterministic oracle and random baselines. Scores are raw ranking
signals, not probabilities; downstream selection only uses ordering.
"""

from __future__ import annotations

import json
import logging
from abc import ABC, abstractmethod
from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import DocumentPair
from .errors import ScoreFormatError
from .matching import oracle_keyphrases
from .phrasing import Granularity, PhraseSpan, Token, TokenKind, segment, tokenize
from .rng import SplitMix64, stable_seed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TokenScore:
    start: int
    end: int
    score: float


@dataclass(frozen=True)
class TokenScoreMap:
    """Sorted, non-overlapping per-token scores for one document.

    ``missing`` records word-token boundaries that had no entry in an
    external score file and were defaulted to zero.
    """

    doc_id: str
    spans: tuple[TokenScore, ...]
    missing: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        prev_end = -1
        for ts in self.spans:
            if ts.start < prev_end:
                raise ScoreFormatError(
                    f"doc {self.doc_id!r}: token scores unsorted or overlapping "
                    f"near offset {ts.start}"
                )
            if ts.start >= ts.end:
                raise ScoreFormatError(
                    f"doc {self.doc_id!r}: empty token span at offset {ts.start}"
                )
            prev_end = ts.end

    @cached_property
    def table(self) -> dict[tuple[int, int], float]:
        return {(ts.start, ts.end): ts.score for ts in self.spans}


class ScoreSource(ABC):
    """Anything that can score every word-kind token of a document."""

    name = "abstract"

    @abstractmethod
    def score(self, doc: DocumentPair) -> TokenScoreMap: ...


def phrase_score(span: PhraseSpan, scores: TokenScoreMap) -> float:
    """Arithmetic mean of the word-kind member-token scores.

    Tokens without an entry contribute 0. Spans with no word-kind tokens
    (possible at sentence granularity) score 0.
    """
    table = scores.table
    vals = [
        table.get((t.start, t.end), 0.0)
        for t in span.tokens
        if t.kind is TokenKind.WORD
    ]
    if not vals:
        return 0.0
    return sum(vals) / len(vals)


def phrase_score_sum(span: PhraseSpan, scores: TokenScoreMap) -> float:
    """Sum aggregation over word-kind member tokens (native RAKE ranking)."""
    table = scores.table
    return sum(
        table.get((t.start, t.end), 0.0)
        for t in span.tokens
        if t.kind is TokenKind.WORD
    )


def load_external_scores(path: str | Path) -> dict[str, TokenScoreMap]:
    """Read a logits JSONL file: {"id": str, "tokens": [{"start", "end", "logit"}]}.

    Duplicate document ids, unsorted spans, or overlapping spans raise
    ScoreFormatError naming the offending document.
    """
    out: dict[str, TokenScoreMap] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                doc_id = rec["id"]
                spans = tuple(
                    TokenScore(int(t["start"]), int(t["end"]), float(t["logit"]))
                    for t in rec["tokens"]
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise ScoreFormatError(f"line {lineno}: malformed score record ({exc})") from exc
            if doc_id in out:
                raise ScoreFormatError(f"line {lineno}: duplicate doc id {doc_id!r}")
            out[doc_id] = TokenScoreMap(doc_id, spans)
    return out


def align_scores(raw: TokenScoreMap, tokens: Sequence[Token]) -> TokenScoreMap:
    """Snap raw score spans onto a document's token boundaries.

    A raw span must land on some token within one character at each
    edge; spans snapping to stopword or punctuation tokens are dropped
    (those kinds are never scored), and anything further off is a format
    error. Word tokens left without a score get 0 and are reported in
    ``missing``.
    """
    starts = [t.start for t in tokens]
    matched: dict[tuple[int, int], float] = {}
    for ts in raw.spans:
        idx = bisect_left(starts, ts.start)
        tok = None
        for cand in (idx - 1, idx, idx + 1):
            if 0 <= cand < len(tokens):
                t = tokens[cand]
                if abs(t.start - ts.start) <= 1 and abs(t.end - ts.end) <= 1:
                    tok = t
                    break
        if tok is None:
            raise ScoreFormatError(
                f"doc {raw.doc_id!r}: score span [{ts.start}, {ts.end}) matches "
                "no token boundary within 1 char"
            )
        if tok.kind is TokenKind.WORD:
            matched.setdefault((tok.start, tok.end), ts.score)
    spans = []
    missing = []
    for t in tokens:
        if t.kind is not TokenKind.WORD:
            continue
        key = (t.start, t.end)
        if key in matched:
            spans.append(TokenScore(t.start, t.end, matched[key]))
        else:
            spans.append(TokenScore(t.start, t.end, 0.0))
            missing.append(key)
    return TokenScoreMap(raw.doc_id, tuple(spans), tuple(missing))


class ExternalScorer(ScoreSource):
    """Serves logits loaded from a trainer export, aligned per document."""

    name = "external"

    def __init__(self, maps: dict[str, TokenScoreMap], stopwords=None):
        self._maps = maps
        self._stopwords = stopwords

    def score(self, doc: DocumentPair) -> TokenScoreMap:
        tokens = tokenize(doc.source, self._stopwords)
        raw = self._maps.get(doc.id)
        if raw is None:
            log.warning("no external scores for doc %s; all tokens default to 0", doc.id)
            raw = TokenScoreMap(doc.id, ())
        aligned = align_scores(raw, tokens)
        if aligned.missing:
            log.warning(
                "doc %s: %d word token(s) without external scores defaulted to 0",
                doc.id,
                len(aligned.missing),
            )
        return aligned


def textrank_score(
    doc: DocumentPair,
    window: int = 4,
    damping: float = 0.85,
    iters: int = 100,
    tol: float = 1e-6,
    stopwords=None,
) -> TokenScoreMap:
    """TextRank over the word co-occurrence graph.

    Nodes are lowercased word-kind tokens; an undirected edge joins two
    words whose positions in the word sequence differ by less than
    ``window``. Power iteration solves r = (1-d)*1 + d*M r with M the
    degree-normalized adjacency; under this normalization the scores of
    a connected dangling-free graph sum to the node count. Node scores
    are broadcast back to every token occurrence.
    """
    if window < 2:
        raise ValueError("window must be >= 2")
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must be in (0, 1)")
    toks = [t for t in tokenize(doc.source, stopwords) if t.kind is TokenKind.WORD]
    if not toks:
        return TokenScoreMap(doc.id, ())
    vocab: dict[str, int] = {}
    seq = []
    for t in toks:
        word = t.text.lower()
        if word not in vocab:
            vocab[word] = len(vocab)
        seq.append(vocab[word])
    n = len(vocab)
    adj = np.zeros((n, n), dtype=bool)
    for i in range(len(seq)):
        for j in range(i + 1, min(i + window, len(seq))):
            a, b = seq[i], seq[j]
            if a != b:
                adj[a, b] = adj[b, a] = True
    degree = adj.sum(axis=0)
    norm = np.where(degree > 0, degree, 1)
    transition = adj.astype(float) / norm[np.newaxis, :]
    rank = np.ones(n)
    for _ in range(iters):
        updated = (1.0 - damping) + damping * (transition @ rank)
        if np.max(np.abs(updated - rank)) < tol:
            rank = updated
            break
        rank = updated
    spans = tuple(
        TokenScore(t.start, t.end, float(rank[seq[k]])) for k, t in enumerate(toks)
    )
    return TokenScoreMap(doc.id, spans)


def rake_score(doc: DocumentPair, stopwords=None) -> TokenScoreMap:
    """RAKE word scores: co-occurrence degree / frequency.

    Candidate phrases are the stopword/punctuation-delimited word runs;
    degree counts co-occurrences within those phrases (self included).
    """
    tokens = [t for t in tokenize(doc.source, stopwords) if t.kind is TokenKind.WORD]
    if not tokens:
        return TokenScoreMap(doc.id, ())
    phrases = segment(doc.source, Granularity.PHRASE, stopwords)
    freq: Counter[str] = Counter()
    degree: Counter[str] = Counter()
    for ph in phrases:
        size = len(ph.tokens)
        for t in ph.tokens:
            word = t.text.lower()
            freq[word] += 1
            degree[word] += size
    by_word = {w: degree[w] / freq[w] for w in freq}
    spans = tuple(
        TokenScore(t.start, t.end, by_word.get(t.text.lower(), 0.0)) for t in tokens
    )
    return TokenScoreMap(doc.id, spans)


class TextRankScorer(ScoreSource):
    name = "textrank"

    def __init__(self, window=4, damping=0.85, iters=100, tol=1e-6, stopwords=None):
        self.window = window
        self.damping = damping
        self.iters = iters
        self.tol = tol
        self._stopwords = stopwords

    def score(self, doc: DocumentPair) -> TokenScoreMap:
        return textrank_score(
            doc, self.window, self.damping, self.iters, self.tol, self._stopwords
        )


class RakeScorer(ScoreSource):
    name = "rake"

    def __init__(self, stopwords=None):
        self._stopwords = stopwords

    def score(self, doc: DocumentPair) -> TokenScoreMap:
        return rake_score(doc, self._stopwords)


class OracleScorer(ScoreSource):
    """Planted upper-bound signal: 1.0 inside oracle keyphrases, 0 elsewhere.

    Requires documents with reference summaries.
    """

    name = "oracle"

    def __init__(self, granularity: Granularity = Granularity.PHRASE, stopwords=None):
        self.granularity = granularity
        self._stopwords = stopwords

    def score(self, doc: DocumentPair) -> TokenScoreMap:
        tokens = [t for t in tokenize(doc.source, self._stopwords) if t.kind is TokenKind.WORD]
        ranges = [
            (sp.start, sp.end)
            for sp in oracle_keyphrases(doc, self.granularity, self._stopwords)
        ]
        spans = tuple(
            TokenScore(
                t.start,
                t.end,
                1.0 if any(s <= t.start and t.end <= e for s, e in ranges) else 0.0,
            )
            for t in tokens
        )
        return TokenScoreMap(doc.id, spans)


class RandomScorer(ScoreSource):
    """Seeded uniform noise; the floor baseline for extractor comparisons."""

    name = "random"

    def __init__(self, seed: int = 0, stopwords=None):
        self.seed = seed
        self._stopwords = stopwords

    def score(self, doc: DocumentPair) -> TokenScoreMap:
        rng = SplitMix64(stable_seed(self.seed, doc.id))
        spans = tuple(
            TokenScore(t.start, t.end, rng.random())
            for t in tokenize(doc.source, self._stopwords)
            if t.kind is TokenKind.WORD
        )
        return TokenScoreMap(doc.id, spans)


def coverage_gaps(doc: DocumentPair, scores: TokenScoreMap, stopwords=None) -> list[tuple[int, int]]:
    """Word-kind token boundaries absent from a score map (invariant probe)."""
    table = scores.table
    return [
        (t.start, t.end)
        for t in tokenize(doc.source, stopwords)
        if t.kind is TokenKind.WORD and (t.start, t.end) not in table
    ]
