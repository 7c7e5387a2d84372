"""Taint queries and typed-node coverage."""

from __future__ import annotations

import pytest

from typeflow.dataflow import (
    TaintQuery,
    aggregate_coverage,
    check_flow_path,
    run_query,
    typed_coverage_report,
)
from typeflow.errors import MismatchError
from typeflow.graph import GraphNodeKind, build_graph
from typeflow.inference import heuristic_backend, infer
from typeflow.parser import parse
from typeflow.propagation import propagate, repropagate_with_inferences
from typeflow.slicing import extract_slices, group_program_slices

REQUEST_BODY_QUERY = TaintQuery(
    source_types=frozenset({"__ecma.Request", "__express.Request", "NextApiRequest"}),
    sink_callee="*.query",
    source_member="body",
    sink_arg_positions=frozenset({1}),
)


def graph_of(source, file_id="f.js"):
    return build_graph(parse(source, file_id).program, file_id, source)


@pytest.fixture(scope="module")
def case_study(fixtures_dir):
    source = (fixtures_dir / "dynamodb.js").read_text()
    g = graph_of(source, "dynamodb.js")
    before, _ = propagate(g, 2)
    slices = extract_slices(before)
    groups = group_program_slices(before, slices)
    backend = heuristic_backend(str(fixtures_dir / "lexicon.json"))
    predictions = infer(groups, backend)
    after = repropagate_with_inferences(before, predictions)
    return before, after


class TestCaseStudy:
    def test_flow_found_with_inference(self, case_study):
        _, after = case_study
        flows = run_query(after, REQUEST_BODY_QUERY)
        assert len(flows) == 1
        (flow,) = flows
        names = [after.node(n).name for n in flow.steps]
        assert names[0] == "req"
        assert "body" in names
        assert "params" in names
        assert flow.scope == "dynamodb.js::program:handler"

    def test_no_flow_without_inference(self, case_study):
        before, _ = case_study
        assert run_query(before, REQUEST_BODY_QUERY) == []

    def test_no_sink_no_flow(self):
        src = "const h = (req: NextApiRequest) => { let b = req.body; b.use(); };"
        g, _ = propagate(graph_of(src), 1)
        query = TaintQuery(
            source_types=frozenset({"NextApiRequest"}),
            sink_callee="*.query",
            source_member="body",
        )
        assert run_query(g, query) == []

    def test_flow_path_replays_mechanically(self, case_study):
        _, after = case_study
        for flow in run_query(after, REQUEST_BODY_QUERY):
            assert check_flow_path(after, flow, REQUEST_BODY_QUERY)


class TestTaintSemantics:
    def test_direct_assignment_copy(self):
        src = (
            "const h = (req: Evil) => {\n"
            "  let a = req;\n"
            "  let b = a;\n"
            "  drain(b);\n"
            "};"
        )
        g, _ = propagate(graph_of(src), 1)
        query = TaintQuery(source_types=frozenset({"Evil"}), sink_callee="drain")
        flows = run_query(g, query)
        assert len(flows) == 1

    def test_reassignment_kills_taint(self):
        # With a member-restricted source, the copy (not the variable's own
        # type) carries the taint, so overwriting it is observable.
        src = (
            "const h = (req: Evil) => {\n"
            "  let a = req.body;\n"
            "  a = clean();\n"
            "  drain(a);\n"
            "};\nfunction clean(){}"
        )
        g, _ = propagate(graph_of(src), 1)
        query = TaintQuery(
            source_types=frozenset({"Evil"}), sink_callee="drain", source_member="body"
        )
        assert run_query(g, query) == []
        # Without the overwrite the same program does flow.
        flowing = src.replace("  a = clean();\n", "")
        g2, _ = propagate(graph_of(flowing), 1)
        assert len(run_query(g2, query)) == 1

    def test_object_literal_embedding(self):
        src = (
            "const h = (req: Evil) => {\n"
            "  let box = { inner: req.body };\n"
            "  drain(box);\n"
            "};"
        )
        g, _ = propagate(graph_of(src), 1)
        query = TaintQuery(
            source_types=frozenset({"Evil"}), sink_callee="drain", source_member="body"
        )
        assert len(run_query(g, query)) == 1

    def test_member_restriction(self):
        src = "const h = (req: Evil) => { drain(req.headers); };"
        g, _ = propagate(graph_of(src), 1)
        query = TaintQuery(
            source_types=frozenset({"Evil"}), sink_callee="drain", source_member="body"
        )
        assert run_query(g, query) == []

    def test_call_pass_through_and_sanitizer(self):
        src = (
            "const h = (req: Evil) => {\n"
            "  let x = wrap(req.body);\n"
            "  drain(x);\n"
            "};"
        )
        g, _ = propagate(graph_of(src), 1)
        base = dict(
            source_types=frozenset({"Evil"}),
            sink_callee="drain",
            source_member="body",
        )
        assert len(run_query(g, TaintQuery(**base))) == 1
        cleaned = TaintQuery(**base, sanitizers=frozenset({"wrap"}))
        assert run_query(g, cleaned) == []

    def test_capture_carries_taint_into_closures(self):
        src = (
            "const h = (req: Evil) => {\n"
            "  let payload = req.body;\n"
            "  const send = () => { drain(payload); };\n"
            "};"
        )
        g, _ = propagate(graph_of(src), 1)
        query = TaintQuery(
            source_types=frozenset({"Evil"}), sink_callee="drain", source_member="body"
        )
        flows = run_query(g, query)
        assert len(flows) == 1
        assert flows[0].scope.endswith(":send")

    def test_member_write_embedding(self):
        src = (
            "const h = (req: Evil) => {\n"
            "  let box = {};\n"
            "  box.data = req.body;\n"
            "  drain(box);\n"
            "};"
        )
        g, _ = propagate(graph_of(src), 1)
        query = TaintQuery(
            source_types=frozenset({"Evil"}), sink_callee="drain", source_member="body"
        )
        flows = run_query(g, query)
        assert len(flows) == 1
        assert check_flow_path(g, flows[0], query)

    def test_receiver_position_zero(self):
        src = "const h = (req: Evil) => { req.emit(1); };"
        g, _ = propagate(graph_of(src), 1)
        query = TaintQuery(
            source_types=frozenset({"Evil"}),
            sink_callee="emit",
            sink_arg_positions=frozenset({0}),
        )
        assert len(run_query(g, query)) == 1

    def test_soundness_of_emptiness(self, fixtures_dir):
        # Removing the only source-typed annotation removes every flow.
        source = (fixtures_dir / "dynamodb.js").read_text()
        g, _ = propagate(graph_of(source, "dynamodb.js"), 2)
        assert run_query(g, REQUEST_BODY_QUERY) == []

    def test_monotonicity_in_types(self, case_study):
        # Every flow found before adding more source types survives after.
        _, after = case_study
        flows_before = {tuple(f.steps) for f in run_query(after, REQUEST_BODY_QUERY)}
        widened = TaintQuery(
            source_types=REQUEST_BODY_QUERY.source_types | {"NextApiResponse"},
            sink_callee=REQUEST_BODY_QUERY.sink_callee,
            source_member=REQUEST_BODY_QUERY.source_member,
            sink_arg_positions=REQUEST_BODY_QUERY.sink_arg_positions,
        )
        flows_after = {tuple(f.steps) for f in run_query(after, widened)}
        assert flows_before <= flows_after


class TestCoverage:
    def test_identity_delta_is_zero(self, case_study):
        before, _ = case_study
        report = typed_coverage_report(before, before)
        assert report.delta == 0.0

    def test_fixture_hand_count(self):
        source = (
            "let a = f();\nlet b = g();\na.m();\nb.n();\n"
            "function f(){}\nfunction g(){}"
        )
        g = graph_of(source)
        before, _ = propagate(g, 1)
        after = before.copy()
        typed = 0
        for n in after.nodes:
            if n.kind is GraphNodeKind.LOCAL and n.name in ("a", "b"):
                n.type_full_name = "Widget"
                typed += 1
        assert typed == 2
        report = typed_coverage_report(before, after)
        assert report.after_typed - report.before_typed == 2
        assert report.delta == pytest.approx(2 / report.counted)

    def test_aggregate_is_mean_of_deltas(self, case_study):
        before, after = case_study
        r1 = typed_coverage_report(before, after)
        r2 = typed_coverage_report(before, before)
        agg = aggregate_coverage([r1, r2])
        assert agg["meanDelta"] == pytest.approx((r1.delta + r2.delta) / 2)

    def test_structural_mismatch_raises(self, case_study):
        before, _ = case_study
        other = graph_of("let unrelated = 1;")
        with pytest.raises(MismatchError):
            typed_coverage_report(before, other)
