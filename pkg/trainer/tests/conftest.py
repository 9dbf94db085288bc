import json
import sys
from pathlib import Path

import pytest

# Portable 64-bit generator, same update rule as the extraction pipeline's.
_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def random(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def randint(self, n: int) -> int:
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n


def _char_lcs(a: str, b: str) -> int:
    prev = [0] * (len(b) + 1)
    for ca in a:
        cur = [0]
        for j, cb in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if ca == cb else max(prev[j], cur[-1]))
        prev = cur
    return prev[-1]


def char_fuzz(a: str, b: str) -> float:
    a, b = a.lower(), b.lower()
    return _char_lcs(a, b) / max(len(a), len(b))


def make_vocab(rng: SplitMix64, n: int, marker: bool, letters="bcdfghklmnprstvw"):
    """Pairwise-dissimilar pseudo-words; marker words carry a 'z'."""
    vocab = []
    while len(vocab) < n:
        length = 5 + rng.randint(3)
        word = "".join(letters[rng.randint(len(letters))] for _ in range(length))
        if marker:
            pos = rng.randint(len(word))
            word = word[:pos] + "z" + word[pos + 1 :]
        if all(char_fuzz(word, v) < 0.6 for v in vocab):
            vocab.append(word)
    return vocab


def word_record(doc_id: str, words: list[str]) -> dict:
    """Training record where every word is its own phrase; label = has 'z'."""
    text = " ".join(words)
    phrases = []
    pos = 0
    for w in words:
        phrases.append({"start": pos, "end": pos + len(w), "label": 1 if "z" in w else 0})
        pos += len(w) + 1
    return {"id": doc_id, "text": text, "phrases": phrases}


def write_jsonl(path: Path, rows) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return path


@pytest.fixture(scope="session")
def marker_task(tmp_path_factory):
    """Separable synthetic task: salient iff the word contains 'z'."""
    root = tmp_path_factory.mktemp("marker_task")
    rng = SplitMix64(42)
    clean = make_vocab(rng, 40, marker=False)
    markers = make_vocab(rng, 10, marker=True)
    assert all(char_fuzz(m, c) < 0.6 for m in markers for c in clean)

    def doc_words(n_words, marker_ratio=0.15):
        words = []
        for _ in range(n_words):
            pool = markers if rng.random() < marker_ratio else clean
            words.append(pool[rng.randint(len(pool))])
        return words

    train_path = write_jsonl(
        root / "train_records.jsonl",
        [word_record(f"t{i}", doc_words(30)) for i in range(20)],
    )
    val_rows = []
    for i in range(8):
        words = doc_words(90)
        present = sorted(set(w for w in words if "z" in w))
        val_rows.append(
            {
                "id": f"v{i}",
                "source": " ".join(words),
                "summary": ". ".join(present) + ".",
                "meta": {},
            }
        )
    val_path = write_jsonl(root / "val.jsonl", val_rows)
    return {
        "train": train_path,
        "val": val_path,
        "clean": clean,
        "markers": markers,
        "root": root,
    }
