#!/usr/bin/env python3
"""Walk one file from source text to tagged inference input.

Run from the repository root:

    python demos/01_slice_and_tag.py
"""

from pathlib import Path

from typeflow import build_graph, extract_slices, group_program_slices, parse
from typeflow.inference import render_tagged

FIXTURE = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "dynamodb.js"

source = FIXTURE.read_text()
print("--- source ---")
print(source)

result = parse(source, "dynamodb.js")
print(f"parsed with {len(result.diagnostics)} diagnostics")

graph = build_graph(result.program, "dynamodb.js", source)
print(f"graph: {len(graph.nodes)} nodes, {len(graph.edges)} edges")

slices = extract_slices(graph)
print("\n--- usage slices ---")
for s in slices:
    calls = ", ".join(f"{c.role.value}:{c.callee}" for c in s.calls) or "(no calls)"
    members = ", ".join(m.name for m in s.members) or "-"
    print(f"{s.scope}")
    print(f"  {s.target.symbol:16} def={s.def_source.kind_text():32} "
          f"calls=[{calls}] members=[{members}]")

groups = group_program_slices(graph, slices)
handler = next(g for g in groups if g.scope.endswith(":handler"))
snippet = render_tagged(handler, budget=512)
print("\n--- tagged snippet sent to a backend ---")
print(snippet.text)
