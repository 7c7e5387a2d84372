#!/usr/bin/env python3
"""Query the remote inference service instead of the in-process backend.

Start the service first (requires the service package):

    pip install -e ./service --no-build-isolation
    typeflow-service serve --port 8421 --lexicon tests/fixtures/lexicon.json

then run:

    python demos/04_remote_service.py
"""

from pathlib import Path

from typeflow import build_graph, extract_slices, group_program_slices, parse
from typeflow.errors import BackendUnavailable
from typeflow.inference import RemoteBackend, infer
from typeflow.propagation import propagate

ROOT = Path(__file__).resolve().parents[1] / "tests" / "fixtures"
URL = "http://127.0.0.1:8421"

source = (ROOT / "dynamodb.js").read_text()
graph = build_graph(parse(source, "dynamodb.js").program, "dynamodb.js", source)
typed, _ = propagate(graph, 2)
groups = group_program_slices(typed, extract_slices(typed))

try:
    backend = RemoteBackend(URL)
except BackendUnavailable as e:
    raise SystemExit(f"service not running at {URL}: {e}")

print("backend contract:", backend.contract)
for p in infer(groups, backend):
    print(f"  {p.scope} {p.symbol} -> {p.type_name} @{p.confidence}")
