"""Score summaries with ROUGE-1 / ROUGE-L and keyphrases with recall@K.

Shows the precision/recall/F1 decomposition on hand-sized examples,
then a corpus-level report with its aligned text table and JSON form.

Run from the repo root:  python demos/04_evaluation.py
"""

import tempfile
from pathlib import Path

from kpsum import evaluate_run, load_dataset, recall_at_k, rouge1, rougeL
from kpsum.selection import Keyphrase, KeyphraseSet

DATA = Path(__file__).parent / "data" / "tiny.jsonl"

print("=== single-pair ROUGE ===")
cand, ref = "the cat sat on the mat", "the cat sat"
for name, fn in (("rouge1", rouge1), ("rougeL", rougeL)):
    s = fn(cand, ref)
    print(f"{name}: P={s.precision:.3f} R={s.recall:.3f} F1={s.f1:.3f}   ({cand!r} vs {ref!r})")

print("\n=== recall@K with fuzzy matching ===")
predicted = KeyphraseSet(
    phrases=(Keyphrase("quarterly revenue", 2.0, 0), Keyphrase("ocean", 1.0, 30)),
    k_requested=2,
)
oracle = ["quarterly revenues", "harbor census"]
r = recall_at_k(predicted, oracle, k=2)
print(f"matched {r.matched}/{r.total} oracle phrases -> recall {r.recall:.2f}")
print("('quarterly revenue' fuzz-matches 'quarterly revenues' above the 0.7 threshold)")

print("\n=== corpus report ===")
ds = load_dataset(DATA)
with tempfile.TemporaryDirectory() as tmp:
    run_path = Path(tmp) / "run.jsonl"
    lines = []
    for doc in ds:
        words = doc.summary.split()
        kept = " ".join(words[: max(3, len(words) - 4)])  # imperfect summaries
        lines.append(f'{{"id": "{doc.id}", "summary": "{kept}"}}')
    run_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    report = evaluate_run(run_path, ds)
    print(report.text_table())
    print("\nJSON form:")
    print(report.to_json())
