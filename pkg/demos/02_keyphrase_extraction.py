"""Compare keyphrase extractors: TextRank, RAKE, and the oracle bound.

Each scorer assigns a scalar to every word token; phrases are ranked by
the mean of their token scores and the top-K survivors are deduplicated
by fuzzy matching. recall@K measures how much of the oracle each
extractor recovers.

Run from the repo root:  python demos/02_keyphrase_extraction.py
"""

from pathlib import Path

from kpsum import (
    Granularity,
    MatchConfig,
    OracleScorer,
    RakeScorer,
    TextRankScorer,
    load_dataset,
    oracle_keyphrases,
    recall_at_k,
    segment,
    select_keyphrases,
)

DATA = Path(__file__).parent / "data" / "tiny.jsonl"
K = 5

ds = load_dataset(DATA)
cfg = MatchConfig(epsilon=0.7)
scorers = {"textrank": TextRankScorer(), "rake": RakeScorer(), "oracle": OracleScorer()}

for doc in ds:
    print(f"\n=== {doc.id} ===")
    oracle = oracle_keyphrases(doc)
    print("oracle keyphrases:", "; ".join(s.text for s in oracle))
    spans = segment(doc.source, Granularity.PHRASE)
    for name, scorer in scorers.items():
        kset = select_keyphrases(spans, scorer.score(doc), K, cfg)
        recall = recall_at_k(kset, oracle, K, cfg)
        picks = "; ".join(kset.texts())
        print(f"  {name:<9} recall@{K}={recall.recall:4.2f}  ->  {picks}")
