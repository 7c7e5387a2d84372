"""Protocol parity: the service's lexicon model must answer exactly like
the client's in-process heuristic backend on every fixture payload."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from typeflow.evaluation import mask_annotations
from typeflow.graph import build_graph
from typeflow.inference import HeuristicBackend, Lexicon, build_wire_request, render_tagged
from typeflow.parser import parse
from typeflow.slicing import extract_slices, group_program_slices

from typeflow_service import ServiceConfig, create_app
from typeflow_service.model import LexiconModel

REPO = Path(__file__).resolve().parents[2]
FIXTURES = REPO / "tests" / "fixtures"
sys.path.insert(0, str(REPO / "tests"))

from support.genprog import generate_program  # noqa: E402

LEXICONS = {
    "fixture": FIXTURES / "lexicon.json",
    "corpus": FIXTURES / "corpus_lexicon.json",
    "default": None,
}


def payload_sources() -> list[tuple[str, str]]:
    sources = [("dynamodb.js", (FIXTURES / "dynamodb.js").read_text())]
    for path in sorted((FIXTURES / "mini_corpus").glob("*.ts")):
        masked, _ = mask_annotations(path.read_text(), path.name)
        sources.append((path.name, masked))
    for seed in range(25):
        sources.append((f"gen{seed}.js", generate_program(seed, max_statements=30)))
    return sources


def snippets_for(file_id: str, source: str):
    graph = build_graph(parse(source, file_id).program, file_id, source)
    groups = group_program_slices(graph, extract_slices(graph))
    out = []
    for group in groups:
        snippet = render_tagged(group, 4096)
        if snippet.tag_map:
            out.append(snippet)
    return out


@pytest.mark.parametrize("lexicon_name", sorted(LEXICONS))
def test_parity_on_all_fixture_payloads(lexicon_name):
    lexicon_path = LEXICONS[lexicon_name]
    backend = HeuristicBackend(
        Lexicon.load(str(lexicon_path) if lexicon_path else None)
    )
    model = LexiconModel.from_path(str(lexicon_path) if lexicon_path else None)
    client = TestClient(
        create_app(ServiceConfig(max_batch_size=64), model=model)
    )

    compared = 0
    for file_id, source in payload_sources():
        snippets = snippets_for(file_id, source)
        if not snippets:
            continue
        payload = build_wire_request(snippets)
        response = client.post("/infer", json=payload)
        assert response.status_code == 200, response.text
        remote = response.json()["results"]

        local = backend.predict(snippets)
        assert len(remote) == len(local) == len(snippets)
        for snippet, remote_item, local_answer in zip(snippets, remote, local):
            expected = [
                {"index": index, "type": t, "confidence": c}
                for index, (t, c) in sorted(local_answer.items())
            ]
            got = sorted(remote_item["predictions"], key=lambda p: p["index"])
            assert got == expected, (lexicon_name, file_id, snippet.scope)
            compared += 1
    assert compared > 10


def test_parity_health_matches_client_defaults():
    client = TestClient(create_app(ServiceConfig()))
    body = client.get("/health").json()
    from typeflow.inference import BackendContract

    contract = BackendContract()
    assert body["inputBudget"] == contract.input_budget == 512
    assert body["outputBudget"] == contract.output_budget == 128
