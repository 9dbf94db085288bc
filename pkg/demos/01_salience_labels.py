"""Walk through salience label construction on a small corpus.

Segments each document and its reference summary into phrases, scores
every source phrase against the summary by character-level fuzzy
matching, and shows which phrases cross the threshold.

Run from the repo root:  python demos/01_salience_labels.py
"""

from pathlib import Path

from kpsum import Granularity, MatchConfig, label_phrases, load_dataset, segment

DATA = Path(__file__).parent / "data" / "tiny.jsonl"

ds = load_dataset(DATA)
cfg = MatchConfig(epsilon=0.7)

for doc in ds:
    print(f"\n=== {doc.id} ===")
    print(f"summary: {doc.summary}")
    source_phrases = segment(doc.source, Granularity.PHRASE)
    summary_phrases = segment(doc.summary, Granularity.PHRASE)
    labeled = label_phrases(source_phrases, summary_phrases, cfg)
    for lp in labeled:
        flag = "KEY " if lp.label else "    "
        print(f"  {flag} {lp.best_match_score:5.3f}  {lp.span.text}")

print("\nPhrases marked KEY have a fuzzy match of at least", cfg.epsilon)
print("against some summary phrase; those labels are what the trainer learns.")
