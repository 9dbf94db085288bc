import json
from functools import lru_cache
from pathlib import Path

import pytest

from kpsum.corpus import Dataset, DocumentPair
from kpsum.rng import SplitMix64


# ---------------------------------------------------------------------------
# Independent oracles. These deliberately use different algorithms than the
# package (top-down recursion vs bottom-up DP, list-removal counting vs
# Counter intersection) so the two routes cannot share a bug.
# ---------------------------------------------------------------------------

def lcs_recursive(a, b):
    """Top-down recursive LCS length (memoized), for strings or tuples."""

    @lru_cache(maxsize=None)
    def rec(i, j):
        if i == 0 or j == 0:
            return 0
        if a[i - 1] == b[j - 1]:
            return rec(i - 1, j - 1) + 1
        return max(rec(i - 1, j), rec(i, j - 1))

    result = rec(len(a), len(b))
    rec.cache_clear()
    return result


def fuzz_oracle(a, b):
    a, b = a.lower(), b.lower()
    return lcs_recursive(a, b) / max(len(a), len(b))


def rouge1_brute(candidate_tokens, reference_tokens):
    """Clipped unigram overlap by explicit list removal."""
    pool = list(reference_tokens)
    overlap = 0
    for tok in candidate_tokens:
        if tok in pool:
            pool.remove(tok)
            overlap += 1
    if not candidate_tokens or not reference_tokens:
        return 0.0, 0.0, 0.0
    p = overlap / len(candidate_tokens)
    r = overlap / len(reference_tokens)
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


def rougeL_brute(candidate_tokens, reference_tokens):
    if not candidate_tokens or not reference_tokens:
        return 0.0, 0.0, 0.0
    lcs = lcs_recursive(tuple(candidate_tokens), tuple(reference_tokens))
    p = lcs / len(candidate_tokens)
    r = lcs / len(reference_tokens)
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


# ---------------------------------------------------------------------------
# Synthetic data helpers
# ---------------------------------------------------------------------------

_VOCAB = [
    "ocean", "temperature", "climate", "policy", "meeting", "budget", "river",
    "quantum", "sensor", "harvest", "signal", "tunnel", "market", "village",
    "protein", "engine", "glacier", "network", "council", "treaty", "orbit",
    "forest", "reactor", "housing", "vaccine", "railway", "drought", "museum",
]

_FILLERS = ["the", "a", "of", "and", "to", "in", "on", "with", "for", "is"]


def random_words(rng: SplitMix64, n: int, vocab=None) -> list[str]:
    vocab = vocab or _VOCAB
    return [vocab[rng.randint(len(vocab))] for _ in range(n)]


def random_text(rng: SplitMix64, n_words: int, filler_ratio: float = 0.3) -> str:
    words = []
    for _ in range(n_words):
        if rng.random() < filler_ratio:
            words.append(_FILLERS[rng.randint(len(_FILLERS))])
        else:
            words.append(_VOCAB[rng.randint(len(_VOCAB))])
    return " ".join(words)


def make_doc(doc_id: str, source: str, summary: str = "") -> DocumentPair:
    return DocumentPair(id=doc_id, source=source, summary=summary)


def write_jsonl(path: Path, rows) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return path


@pytest.fixture
def tiny_dataset(tmp_path) -> Path:
    rows = [
        {
            "id": "d1",
            "source": "The council approved the housing budget. Mayor Lopez praised the vote.",
            "summary": "Council approved housing budget.",
            "meta": {"split": "test"},
        },
        {
            "id": "d2",
            "source": "Glacier melt accelerated this decade. Scientists warn about rising ocean temperature across coastal villages.",
            "summary": "Glacier melt raises ocean temperature.",
            "meta": {"split": "test"},
        },
        {
            "id": "d3",
            "source": "The railway museum reopened after the drought ended and the harvest festival returned.",
            "summary": "Railway museum reopened after drought.",
            "meta": {"split": "test"},
        },
    ]
    return write_jsonl(tmp_path / "tiny.jsonl", rows)


@pytest.fixture
def mock_endpoint(tmp_path) -> Path:
    path = tmp_path / "endpoint.json"
    path.write_text(
        json.dumps({"base_url": "mock://keyphrases", "model_id": "mock", "retries": 0}),
        encoding="utf-8",
    )
    return path


def dataset_from_rows(rows) -> Dataset:
    return Dataset(tuple(DocumentPair(**row) for row in rows))
