#!/usr/bin/env python3
"""Score the heuristic backend on the labelled mini corpus.

Annotations are masked and `new` constructees obfuscated before inference,
so the backend can only answer from names, shapes, and the lexicon.

    python demos/03_evaluate_backend.py
"""

from pathlib import Path

from typeflow.evaluation import ScoreMode, evaluate_corpus, mask_annotations
from typeflow.inference import heuristic_backend
from typeflow.typenames import load_top100

ROOT = Path(__file__).resolve().parents[1] / "tests" / "fixtures"

top100_mini = load_top100(str(ROOT / "top100_mini.txt"))
sample = (ROOT / "mini_corpus" / "file02.ts").read_text()
masked, truths = mask_annotations(sample, "file02.ts", top100_mini)
print("--- original ---")
print(sample)
print("--- masked ---")
print(masked)
print("truths:", [(t.symbol, t.true_type, t.category.value) for t in truths])

backend = heuristic_backend(str(ROOT / "corpus_lexicon.json"))
report = evaluate_corpus(ROOT / "mini_corpus", backend, ScoreMode.GREEDY, top100_mini)

print("\n--- report ---")
print(f"overall top-1: {report.top1_overall:.2%}")
print(f"top-100 builtin: {report.top1_top100:.2%}")
print(f"user-defined: {report.top1_user_defined:.2%}")
print(f"other: {report.top1_other:.2%}")
print("counts:", report.counts["byCategory"])
