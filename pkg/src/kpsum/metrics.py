"""Summary and keyphrase evaluation: ROUGE-1, ROUGE-L, recall@K.

ROUGE tokenization is lowercase, split on non-alphanumeric characters,
no stemming. These numbers are internally consistent but make no claim
of digit-exact parity with any external ROUGE implementation.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import Dataset
from .errors import EvaluationError
from .matching import MatchConfig, fuzz, lcs_length
from .phrasing import PhraseSpan
from .selection import Keyphrase, KeyphraseSet

log = logging.getLogger(__name__)

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)


def rouge_tokens(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "RougeScore":
        denom = precision + recall
        f1 = 2.0 * precision * recall / denom if denom > 0 else 0.0
        return cls(precision, recall, f1)


@dataclass(frozen=True)
class RecallAtK:
    k: int
    recall: float
    matched: int
    total: int
    flagged: bool = False


def rouge1(candidate: str, reference: str) -> RougeScore:
    """Unigram overlap with clipped counts."""
    cand = rouge_tokens(candidate)
    ref = rouge_tokens(reference)
    if not ref:
        log.warning("rouge1: empty reference")
        return RougeScore(0.0, 0.0, 0.0)
    if not cand:
        return RougeScore(0.0, 0.0, 0.0)
    overlap = sum((Counter(cand) & Counter(ref)).values())
    return RougeScore.from_pr(overlap / len(cand), overlap / len(ref))


def rougeL(candidate: str, reference: str) -> RougeScore:
    """Token-level longest-common-subsequence similarity."""
    cand = rouge_tokens(candidate)
    ref = rouge_tokens(reference)
    if not ref:
        log.warning("rougeL: empty reference")
        return RougeScore(0.0, 0.0, 0.0)
    if not cand:
        return RougeScore(0.0, 0.0, 0.0)
    lcs = lcs_length(tuple(cand), tuple(ref))
    return RougeScore.from_pr(lcs / len(cand), lcs / len(ref))


def recall_at_k(
    predicted: KeyphraseSet,
    oracle: Sequence[PhraseSpan | str],
    k: int,
    cfg: MatchConfig = MatchConfig(),
) -> RecallAtK:
    """Fraction of oracle phrases fuzz-matched by the top-k predictions.

    Each oracle phrase counts once. An empty oracle returns recall 1.0
    with ``flagged`` set, so corpus averages never divide by zero;
    flagged documents are surfaced in evaluation reports.
    """
    texts = [o if isinstance(o, str) else o.text for o in oracle]
    if not texts:
        return RecallAtK(k=k, recall=1.0, matched=0, total=0, flagged=True)
    top = predicted.phrases[: min(k, len(predicted.phrases))]
    matched = sum(
        1 for ot in texts if any(fuzz(p.text, ot) >= cfg.epsilon for p in top)
    )
    return RecallAtK(k=k, recall=matched / len(texts), matched=matched, total=len(texts))


@dataclass(frozen=True)
class RecallAggregate:
    k: int
    recall: float  # macro mean of per-document recalls
    matched: int
    total: int


@dataclass(frozen=True)
class DocScores:
    doc_id: str
    r1: RougeScore
    rl: RougeScore
    words: int


@dataclass(frozen=True)
class EvalReport:
    n: int
    r1: RougeScore
    rl: RougeScore
    mean_len_words: float
    recall: Mapping[int, RecallAggregate]
    flags: tuple[str, ...]
    per_doc: tuple[DocScores, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "r1": {"p": self.r1.precision, "r": self.r1.recall, "f": self.r1.f1},
            "rl": {"p": self.rl.precision, "r": self.rl.recall, "f": self.rl.f1},
            "mean_len_words": self.mean_len_words,
            "recall_at_k": {
                str(k): {"recall": agg.recall, "matched": agg.matched, "total": agg.total}
                for k, agg in sorted(self.recall.items())
            },
            "flags": list(self.flags),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), ensure_ascii=False, indent=2, sort_keys=True)

    def text_table(self) -> str:
        header = f"{'doc':<20} {'R1-p':>8} {'R1-r':>8} {'R1-f':>8} {'RL-f':>8} {'words':>6}"
        lines = [header, "-" * len(header)]
        for d in self.per_doc:
            lines.append(
                f"{d.doc_id:<20} {d.r1.precision:>8.4f} {d.r1.recall:>8.4f} "
                f"{d.r1.f1:>8.4f} {d.rl.f1:>8.4f} {d.words:>6d}"
            )
        lines.append("-" * len(header))
        lines.append(
            f"{'mean':<20} {self.r1.precision:>8.4f} {self.r1.recall:>8.4f} "
            f"{self.r1.f1:>8.4f} {self.rl.f1:>8.4f} {self.mean_len_words:>6.1f}"
        )
        for k, agg in sorted(self.recall.items()):
            lines.append(f"recall@{k}: {agg.recall:.4f} ({agg.matched}/{agg.total} phrases)")
        if self.flags:
            lines.append("flags: " + ", ".join(self.flags))
        return "\n".join(lines)


def _read_jsonl(path: str | Path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(json.loads(line))
    return out


def _keyphrase_file_to_sets(records: list[dict]) -> dict[str, KeyphraseSet]:
    sets = {}
    for rec in records:
        texts = rec.get("keyphrases", [])
        scores = rec.get("scores") or [0.0] * len(texts)
        phrases = tuple(
            Keyphrase(text=t, score=float(s), start=i)
            for i, (t, s) in enumerate(zip(texts, scores))
        )
        sets[rec["id"]] = KeyphraseSet(phrases=phrases, k_requested=len(phrases))
    return sets


def evaluate_run(
    run_output: str | Path | None,
    ds: Dataset,
    keyphrases_path: str | Path | None = None,
    oracle_path: str | Path | None = None,
    k_list: Sequence[int] = (),
    cfg: MatchConfig = MatchConfig(),
) -> EvalReport:
    """Score a summarization run and/or keyphrase predictions.

    ``run_output`` is the run JSONL ({"id", "summary", ...}); every id in
    it must exist in the dataset, otherwise an EvaluationError lists the
    unknown ids. recall@K needs both a predicted-keyphrase file and an
    oracle file (same {"id", "keyphrases"} schema). With run_output=None
    only recall is computed and the report is flagged "no-run-output".
    """
    by_id = ds.by_id()
    flags: list[str] = []
    per_doc: list[DocScores] = []
    if run_output is not None:
        records = _read_jsonl(run_output)
        unknown = [r["id"] for r in records if r["id"] not in by_id]
        if unknown:
            raise EvaluationError(f"run output ids not in dataset: {', '.join(unknown)}")
        for rec in records:
            ref = by_id[rec["id"]].summary
            if not rouge_tokens(ref):
                flags.append(f"empty-reference:{rec['id']}")
            summary = rec["summary"]
            per_doc.append(
                DocScores(
                    doc_id=rec["id"],
                    r1=rouge1(summary, ref),
                    rl=rougeL(summary, ref),
                    words=len(summary.split()),
                )
            )
    else:
        flags.append("no-run-output")

    recall: dict[int, RecallAggregate] = {}
    if keyphrases_path is not None and oracle_path is not None:
        predicted = _keyphrase_file_to_sets(_read_jsonl(keyphrases_path))
        oracle = {rec["id"]: rec.get("keyphrases", []) for rec in _read_jsonl(oracle_path)}
        unknown = [i for i in predicted if i not in by_id]
        if unknown:
            raise EvaluationError(f"keyphrase ids not in dataset: {', '.join(unknown)}")
        missing = [i for i in predicted if i not in oracle]
        if missing:
            raise EvaluationError(f"oracle file missing ids: {', '.join(missing)}")
        for k in k_list:
            per = []
            matched = total = 0
            for doc_id, kset in predicted.items():
                r = recall_at_k(kset, oracle[doc_id], k, cfg)
                per.append(r.recall)
                matched += r.matched
                total += r.total
                if r.flagged:
                    flag = f"empty-oracle:{doc_id}"
                    if flag not in flags:
                        flags.append(flag)
            recall[k] = RecallAggregate(
                k=k,
                recall=sum(per) / len(per) if per else 0.0,
                matched=matched,
                total=total,
            )

    n = len(per_doc)
    if n:
        r1 = RougeScore(
            sum(d.r1.precision for d in per_doc) / n,
            sum(d.r1.recall for d in per_doc) / n,
            sum(d.r1.f1 for d in per_doc) / n,
        )
        rl = RougeScore(
            sum(d.rl.precision for d in per_doc) / n,
            sum(d.rl.recall for d in per_doc) / n,
            sum(d.rl.f1 for d in per_doc) / n,
        )
        mean_len = sum(d.words for d in per_doc) / n
    else:
        r1 = rl = RougeScore(0.0, 0.0, 0.0)
        mean_len = 0.0
    return EvalReport(
        n=n,
        r1=r1,
        rl=rl,
        mean_len_words=mean_len,
        recall=recall,
        flags=tuple(flags),
        per_doc=tuple(per_doc),
    )
