#!/usr/bin/env python3
"""The dataflow case study: type inference unlocks a taint finding.

The query looks for an unsanitized request body flowing into a database
query.  Without recovered types the request parameter is ANY and nothing
seeds; with the heuristic backend's suggestion accepted, the flow appears.

    python demos/02_taint_case_study.py
"""

from pathlib import Path

from typeflow import build_graph, extract_slices, group_program_slices, parse
from typeflow.dataflow import TaintQuery, run_query, typed_coverage_report
from typeflow.inference import heuristic_backend, infer
from typeflow.propagation import propagate, repropagate_with_inferences

ROOT = Path(__file__).resolve().parents[1] / "tests" / "fixtures"

source = (ROOT / "dynamodb.js").read_text()
graph = build_graph(parse(source, "dynamodb.js").program, "dynamodb.js", source)
before, type_map = propagate(graph, iterations=2)
print("propagation map:")
for key, types in type_map.to_json().items():
    print(f"  {key} = {types}")

query = TaintQuery(
    source_types=frozenset({"__ecma.Request", "__express.Request", "NextApiRequest"}),
    sink_callee="*.query",
    source_member="body",
    sink_arg_positions=frozenset({1}),
)
print(f"\nflows before inference: {len(run_query(before, query))}")

backend = heuristic_backend(str(ROOT / "lexicon.json"))
groups = group_program_slices(before, extract_slices(before))
predictions = infer(groups, backend)
print("accepted predictions:", [(p.symbol, p.type_name) for p in predictions])

after = repropagate_with_inferences(before, predictions)
coverage = typed_coverage_report(before, after)
print(f"typed nodes: {coverage.before_typed}/{coverage.counted} -> "
      f"{coverage.after_typed}/{coverage.counted} (delta {coverage.delta:+.2f})")

flows = run_query(after, query)
print(f"\nflows after inference: {len(flows)}")
for flow in flows:
    print(f"  in {flow.scope}:")
    for step in flow.to_json(after)["steps"]:
        line = step["span"]["startLine"]
        print(f"    {step['kind']:14} {step['name'] or '':14} line {line}")
