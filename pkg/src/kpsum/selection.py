"""Top-K deduplicated keyphrase selection.

Candidates are visited in score-descending order (earlier document
position breaks ties). A candidate that fuzz-matches an already retained
phrase at or above epsilon replaces it when strictly longer in
characters (the slot keeps the pair's max score) and is dropped
otherwise. A replacement can create a new epsilon-level duplicate
against some other retained phrase, so merging repeats until the
retained set is pairwise distinct again; slots freed by merging are
refilled by later candidates. The result always satisfies: size <= K,
scores non-increasing, pairwise fuzz < epsilon.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .matching import MatchConfig, fuzz
from .phrasing import PhraseSpan, TokenKind
from .scoring import TokenScoreMap, phrase_score, phrase_score_sum


@dataclass(frozen=True)
class Keyphrase:
    text: str
    score: float
    start: int


@dataclass(frozen=True)
class KeyphraseSet:
    phrases: tuple[Keyphrase, ...]
    k_requested: int

    def texts(self) -> list[str]:
        return [p.text for p in self.phrases]

    def ordered(self, by: str = "score") -> tuple[Keyphrase, ...]:
        """Phrases by selection score (default) or by document position."""
        if by == "score":
            return self.phrases
        if by == "position":
            return tuple(sorted(self.phrases, key=lambda p: p.start))
        raise ValueError(f"unknown order {by!r}")


class _Slot:
    __slots__ = ("text", "score", "start")

    def __init__(self, text: str, score: float, start: int):
        self.text = text
        self.score = score
        self.start = start


def _close_pairwise(retained: list[_Slot], epsilon: float) -> None:
    """Merge until no two retained slots fuzz-match at epsilon.

    The earlier (higher-scored) slot survives, adopting the longer
    surface form; each merge removes one slot, so this terminates.
    """
    restart = True
    while restart:
        restart = False
        for i in range(len(retained)):
            for j in range(i + 1, len(retained)):
                if fuzz(retained[i].text, retained[j].text) >= epsilon:
                    keep, gone = retained[i], retained[j]
                    if len(gone.text) > len(keep.text):
                        keep.text, keep.start = gone.text, gone.start
                    keep.score = max(keep.score, gone.score)
                    del retained[j]
                    restart = True
                    break
            if restart:
                break


def select_keyphrases(
    spans: Sequence[PhraseSpan],
    scores: TokenScoreMap,
    k: int,
    cfg: MatchConfig = MatchConfig(),
    aggregate: str = "mean",
) -> KeyphraseSet:
    """Greedy top-K selection with fuzzy deduplication.

    ``aggregate`` picks the phrase score: "mean" of member-token scores
    (the default pipeline) or "sum" (native RAKE ranking; sum is not
    invariant under affine score shifts across phrase lengths). Spans
    with no word-kind tokens are not scorable and are skipped; no
    scorable spans give an empty set, not an error.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if aggregate not in ("mean", "sum"):
        raise ValueError(f"unknown aggregate {aggregate!r}")
    agg = phrase_score if aggregate == "mean" else phrase_score_sum
    candidates = [
        (sp, agg(sp, scores))
        for sp in spans
        if any(t.kind is TokenKind.WORD for t in sp.tokens)
    ]
    candidates.sort(key=lambda item: (-item[1], item[0].start))
    retained: list[_Slot] = []
    for span, score in candidates:
        dup = None
        for i, slot in enumerate(retained):
            if fuzz(span.text, slot.text) >= cfg.epsilon:
                dup = i
                break
        if dup is None:
            if len(retained) < k:
                retained.append(_Slot(span.text, score, span.start))
        else:
            slot = retained[dup]
            if len(span.text) > len(slot.text):
                slot.text, slot.start = span.text, span.start
                slot.score = max(slot.score, score)
                _close_pairwise(retained, cfg.epsilon)
    phrases = tuple(Keyphrase(s.text, s.score, s.start) for s in retained)
    return KeyphraseSet(phrases=phrases, k_requested=k)
