"""Declaration loading and constraint validation."""

from __future__ import annotations

import pytest

from typeflow.declarations import (
    DeclarationRegistry,
    DeclFormat,
    ValidationStatus,
    load_declarations,
    validate,
)
from typeflow.errors import DeclParseError
from typeflow.graph import build_graph
from typeflow.parser import parse
from typeflow.slicing import extract_slices


def slice_for(source: str, symbol: str):
    g = build_graph(parse(source, "f.js").program, "f.js", source)
    for s in extract_slices(g):
        if s.target.symbol == symbol:
            return s
    raise AssertionError(f"no slice for {symbol!r}")


@pytest.fixture(scope="module")
def registry(fixtures_dir) -> DeclarationRegistry:
    reg = DeclarationRegistry()
    text = (fixtures_dir / "web_framework.d.ts").read_text()
    for decl in load_declarations(text, DeclFormat.DTS_SUBSET):
        reg.add(decl)
    return reg


class TestDtsSubset:
    def test_request_declaration_shape(self, registry):
        req = registry.get("Request")
        assert req is not None
        assert "body" in req.properties
        assert "connect" not in req.methods

    def test_empty_file(self):
        assert load_declarations("", DeclFormat.DTS_SUBSET) == []

    def test_declare_class_extends(self):
        decls = load_declarations(
            "declare class A extends B { f(x): C }", DeclFormat.DTS_SUBSET
        )
        (a,) = decls
        assert a.supertypes == ["B"]
        assert a.methods["f"].min_arity == 1
        assert a.methods["f"].max_arity == 1

    def test_optional_parameters_widen_arity(self):
        decls = load_declarations(
            "interface T { m(a, b?: number, c?): void; }", DeclFormat.DTS_SUBSET
        )
        sig = decls[0].methods["m"]
        assert (sig.min_arity, sig.max_arity) == (1, 3)

    def test_out_of_subset_reports_position(self):
        with pytest.raises(DeclParseError) as err:
            load_declarations("interface G<T> { m(): T }", DeclFormat.DTS_SUBSET)
        assert err.value.line == 1

    def test_duplicate_member_rejected(self):
        with pytest.raises(DeclParseError):
            load_declarations(
                "interface X { m(): void; m(a): void; }", DeclFormat.DTS_SUBSET
            )


class TestJsonStub:
    def test_load(self, fixtures_dir):
        text = (fixtures_dir / "decls_stub.json").read_text()
        (bus,) = load_declarations(text, DeclFormat.JSON_STUB)
        assert bus.name == "EventBus"
        assert bus.methods["emit"].max_arity == 2
        assert bus.properties["channel"] == "string"
        assert bus.supertypes == ["Object"]

    def test_malformed_json(self):
        with pytest.raises(DeclParseError):
            load_declarations("{not json", DeclFormat.JSON_STUB)


class TestValidate:
    def test_connect_is_rejected_for_request(self, registry):
        s = slice_for("let r = f();\nr.connect();\nfunction f(){}", "r")
        verdict = validate(s, "Request", registry)
        assert verdict.status is ValidationStatus.VIOLATION
        assert any("connect" in d for d in verdict.details)

    def test_body_read_is_accepted_for_request(self, registry):
        s = slice_for("let r = f();\nlet b = r.body;\nb.x();\nfunction f(){}", "r")
        verdict = validate(s, "Request", registry)
        assert verdict.status is ValidationStatus.CONSISTENT

    def test_zero_calls_is_vacuously_consistent(self, registry):
        s = slice_for("let r = f();\nlet b = r;\nb.x();\nfunction f(){}", "r")
        assert s.calls == [] and s.members == []
        for name in registry.names():
            assert validate(s, name, registry).consistent

    def test_document_client_query_arity(self, registry):
        s = slice_for("let d = f();\nd.query(params, cb);\nfunction f(){}", "d")
        assert validate(s, "DocumentClient", registry).consistent

    def test_arity_violation(self, registry):
        s = slice_for("let d = f();\nd.query(a, b, c);\nfunction f(){}", "d")
        verdict = validate(s, "DocumentClient", registry)
        assert verdict.status is ValidationStatus.VIOLATION
        assert any("arity" in d for d in verdict.details)

    def test_supertype_members_count(self, registry):
        # NextApiRequest inherits body from Request.
        s = slice_for("let r = f();\nlet b = r.body;\nb.x();\nfunction f(){}", "r")
        assert validate(s, "NextApiRequest", registry).consistent

    def test_supertype_monotonicity(self, registry):
        # Anything consistent for the supertype stays consistent for a
        # subtype that only adds members.
        sources = [
            "let r = f();\nr.end();\nfunction f(){}",
            "let r = f();\nlet c = r.statusCode;\nc.x();\nfunction f(){}",
        ]
        for source in sources:
            s = slice_for(source, "r")
            if validate(s, "ServerResponse", registry).consistent:
                assert validate(s, "NextApiResponse", registry).consistent

    def test_unknown_type(self, registry):
        s = slice_for("let r = f();\nr.anything();\nfunction f(){}", "r")
        assert validate(s, "Customer", registry).status is ValidationStatus.UNKNOWN_TYPE

    def test_unhelpful_suggestions_are_asserted_away(self, registry):
        s = slice_for("let r = f();\nr.m();\nfunction f(){}", "r")
        for unhelpful in ("any", "ANY", "void", "NULL", "undefined"):
            with pytest.raises(AssertionError):
                validate(s, unhelpful, registry)

    def test_builtin_declarations_preloaded(self):
        reg = DeclarationRegistry()
        s = slice_for('let s = f();\ns.trim();\nfunction f(){}', "s")
        assert validate(s, "String", reg).consistent

    def test_builtin_alias_spellings_resolve(self):
        reg = DeclarationRegistry()
        s = slice_for('let s = f();\ns.trim();\nfunction f(){}', "s")
        # Model vocabulary and canonical sentinel spellings hit the same
        # declaration as the capitalized builtin.
        assert validate(s, "string", reg).consistent
        assert validate(s, "__ecma.String", reg).consistent
        bad = slice_for('let s = f();\ns.launch();\nfunction f(){}', "s")
        assert not validate(bad, "string", reg).consistent

    def test_cycle_guard_terminates(self):
        reg = DeclarationRegistry(preload_builtins=False)
        for decl in load_declarations(
            "interface A extends B { x: any }\ninterface B extends A { y: any }",
            DeclFormat.DTS_SUBSET,
        ):
            reg.add(decl)
        assert reg.has_member("A", "y")
        assert not reg.has_member("A", "z")
