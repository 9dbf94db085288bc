"""Prompt assembly and a full mock summarization run.

Renders a bundled keyphrase prompt template, runs the whole pipeline
with the deterministic mock client (no network), and contrasts a
zero-shot run with a keyphrase-augmented run.

Run from the repo root:  python demos/03_prompted_summarization.py
"""

import json
import tempfile
from pathlib import Path

from kpsum import (
    OracleScorer,
    bundled_template,
    load_dataset,
    render_prompt,
    run_summarization,
    select_keyphrases,
    segment,
)
from kpsum.prompting import MockKeyphrasesClient

DATA = Path(__file__).parent / "data" / "tiny.jsonl"

ds = load_dataset(DATA)
kp_tpl = bundled_template("cnn_claude_kp")
plain_tpl = bundled_template("cnn_claude")

doc = ds[0]
spans = segment(doc.source)
kset = select_keyphrases(spans, OracleScorer().score(doc), k=5)
prompt = render_prompt(kp_tpl, doc, kset)
print("=== rendered prompt (keyphrase variant) ===")
print(prompt)

with tempfile.TemporaryDirectory() as tmp:
    out_kp = Path(tmp) / "with_keyphrases.jsonl"
    out_plain = Path(tmp) / "zero_shot.jsonl"
    report_kp = run_summarization(ds, kp_tpl, OracleScorer(), 5, MockKeyphrasesClient(), out_kp)
    report_plain = run_summarization(ds, plain_tpl, None, 5, MockKeyphrasesClient(), out_plain)
    print("=== mock run reports ===")
    print(f"keyphrase run: {report_kp.n_ok}/{report_kp.n_total} ok, "
          f"mean {report_kp.mean_summary_words:.1f} words")
    print(f"zero-shot run: {report_plain.n_ok}/{report_plain.n_total} ok")
    print("\nfirst keyphrase-run record:")
    print(json.dumps(json.loads(out_kp.read_text().splitlines()[0]), indent=2)[:400], "...")

print("\nSwap the mock for a real endpoint by writing an endpoint config JSON")
print('({"base_url": "https://...", "model_id": ..., "auth_env_var": ...})')
print("and using the CLI:  kpsum run --endpoint endpoint.json ...")
