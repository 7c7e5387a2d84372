"""Frontend tests: subset parsing, recovery, spans."""

from __future__ import annotations

import pytest

from typeflow.ast_nodes import NodeKind
from typeflow.errors import ParseError
from typeflow.parser import parse, supported_subset
from typeflow.spans import span_text

from support.genprog import generate_program


def kinds(node):
    return [c.kind for c in node.children]


class TestSubsetParsing:
    def test_handler_fixture_shape(self, dynamodb_source):
        result = parse(dynamodb_source, "dynamodb.js")
        assert result.ok
        program = result.program
        assert program.kind is NodeKind.PROGRAM
        # One top-level arrow-function handler containing a nested closure.
        handler = next(c for c in program.children if c.name == "handler")
        arrow = handler.children[-1]
        assert arrow.kind is NodeKind.ARROW_FUNCTION
        nested = [n for n in arrow.walk() if n.kind is NodeKind.ARROW_FUNCTION]
        assert len(nested) == 2  # the handler itself plus its callback

    def test_empty_file(self):
        result = parse("", "empty.js")
        assert result.ok
        assert result.program.children == []

    def test_class_is_skipped_with_diagnostic(self):
        result = parse("let x = 1; class C {}", "f.js")
        assert [c.kind for c in result.program.children] == [NodeKind.VAR_DECL]
        assert len(result.diagnostics) == 1
        assert "skipped statement" in result.diagnostics[0].message

    def test_multiple_declarators(self):
        result = parse("let a = 1, b = 2;", "f.js")
        assert [c.name for c in result.program.children] == ["a", "b"]

    def test_arrow_expression_body_normalized(self):
        result = parse("const f = x => x.head;", "f.js")
        arrow = result.program.children[0].children[-1]
        body = arrow.children[-1]
        assert body.kind is NodeKind.BLOCK
        assert body.children[0].kind is NodeKind.RETURN

    def test_annotations_parse_and_attach(self):
        result = parse("let p: Promise<string> = q;", "f.js")
        decl = result.program.children[0]
        assert decl.annotation == "Promise<string>"
        ann = decl.children[0]
        assert ann.kind is NodeKind.TYPE_ANNOTATION
        assert ann.name == "Promise<string>"

    def test_parameter_and_return_annotations(self):
        result = parse("function f(a: number, b): string { return b; }", "f.js")
        fn = result.program.children[0]
        params = [c for c in fn.children if c.kind is NodeKind.PARAM]
        assert params[0].annotation == "number"
        assert params[1].annotation is None
        assert fn.annotation == "string"

    def test_import_forms(self):
        source = (
            'import Default from "a";\n'
            'import { one, two as three } from "b";\n'
            'import * as ns from "c";\n'
            'import "d";\n'
        )
        result = parse(source, "f.js")
        assert result.ok
        imports = result.program.children
        assert [i.name for i in imports] == ["a", "b", "c", "d"]
        assert [b.name for b in imports[0].children] == ["Default"]
        assert [b.name for b in imports[1].children] == ["one", "three"]
        assert [b.name for b in imports[2].children] == ["ns"]
        assert imports[3].children == []

    def test_object_literal_shorthand_reads_variable(self):
        result = parse("let email = a; let o = { email };", "f.js")
        obj = result.program.children[1].children[0]
        assert obj.kind is NodeKind.OBJECT_LIT
        assert obj.children[0].kind is NodeKind.IDENTIFIER
        assert obj.children[0].name == "email"

    def test_computed_member_access(self):
        result = parse("a[0];", "f.js")
        member = result.program.children[0]
        assert member.kind is NodeKind.MEMBER_ACCESS
        assert member.name is None
        assert len(member.children) == 2

    def test_new_requires_named_constructor(self):
        result = parse("let x = new (f())();", "f.js")
        assert result.program.children == []
        assert len(result.diagnostics) == 1

    def test_substitution_free_template_is_string(self):
        result = parse("let s = `plain`;", "f.js")
        assert result.program.children[0].children[0].kind is NodeKind.STRING_LIT

    def test_template_substitution_skipped(self):
        result = parse("let s = `a${b}c`;\nlet t = 1;", "f.js")
        assert [c.name for c in result.program.children] == ["t"]
        assert len(result.diagnostics) == 1


class TestRecoveryAndErrors:
    def test_unterminated_string_raises(self):
        with pytest.raises(ParseError):
            parse('let x = "oops', "f.js")

    def test_unterminated_comment_raises(self):
        with pytest.raises(ParseError):
            parse("let x = 1; /* dangling", "f.js")

    def test_recovery_inside_function_body(self):
        source = "function f() {\n  for (;;) {}\n  let ok = 1;\n}\nlet tail = 2;"
        result = parse(source, "f.js")
        fn = result.program.children[0]
        body = fn.children[-1]
        assert [c.name for c in body.children] == ["ok"]
        assert result.program.children[1].name == "tail"
        assert len(result.diagnostics) == 1

    def test_binary_operators_are_outside_the_subset(self):
        result = parse("let x = a + b;\nlet y = 1;", "f.js")
        assert [c.name for c in result.program.children] == ["y"]
        assert len(result.diagnostics) == 1

    def test_recovery_monotonicity_on_generated_programs(self):
        for seed in range(25):
            source = generate_program(seed, max_statements=15)
            before = len(parse(source, "f.js").program.children)
            extended = source + "\nlet appended = 1;\n"
            after = len(parse(extended, "f.js").program.children)
            assert after >= before + 1

    def test_determinism(self):
        source = generate_program(7)
        a = parse(source, "f.js").program.to_json()
        b = parse(source, "f.js").program.to_json()
        assert a == b

    def test_pathological_nesting_recovers(self):
        deep_expr = "let x = " + "[" * 500 + "]" * 500 + ";\nlet ok = 1;"
        result = parse(deep_expr, "f.js")
        assert any("nesting" in d.message for d in result.diagnostics)
        assert [c.name for c in result.program.children] == ["ok"]

        deep_blocks = "{" * 500 + "}" * 500 + "\nlet ok = 1;"
        result = parse(deep_blocks, "f.js")
        assert result.program.children[-1].name == "ok"

    def test_mutation_fuzz_never_crashes(self):
        import random as _random

        rng = _random.Random(99)
        alphabet = "{}()[];=.,+*\"'`\n abcxyz01"
        for seed in range(40):
            source = list(generate_program(seed, max_statements=12))
            for _ in range(rng.randint(1, 6)):
                pos = rng.randrange(len(source))
                source[pos] = rng.choice(alphabet)
            mutated = "".join(source)
            try:
                result = parse(mutated, "f.js")
            except ParseError:
                continue  # unterminated string/comment is the only hard stop
            for node in result.program.walk():
                assert node.span.end_offset <= len(mutated.encode())


class TestSpans:
    def test_round_trip_spans_everywhere(self, dynamodb_source):
        program = parse(dynamodb_source, "f.js").program
        for node in program.walk():
            text = span_text(dynamodb_source, node.span)
            assert text == dynamodb_source.encode()[
                node.span.start_offset : node.span.end_offset
            ].decode()
            for child in node.children:
                assert node.span.contains(child.span)

    def test_byte_offsets_with_non_ascii_strings(self):
        source = 'let greeting = "héllo wörld";\nlet x = 1;\n'
        result = parse(source, "f.js")
        lit = result.program.children[0].children[0]
        assert span_text(source, lit.span) == '"héllo wörld"'
        x_decl = result.program.children[1]
        assert span_text(source, x_decl.span) == "x = 1"

    def test_generated_programs_have_contained_spans(self):
        for seed in range(20):
            source = generate_program(seed, max_statements=20)
            program = parse(source, "f.js").program
            for node in program.walk():
                for child in node.children:
                    assert node.span.contains(child.span), (seed, node.kind)


class TestSupportedSubset:
    def test_includes_arrow_functions(self):
        grammar = supported_subset()
        assert "ArrowFunction" in grammar["node_kinds"]

    def test_includes_type_annotations(self):
        grammar = supported_subset()
        assert "TypeAnnotation" in grammar["node_kinds"]
        assert "type_annotations" in grammar["features"]

    def test_excludes_generators(self):
        grammar = supported_subset()
        assert any("generators" in e for e in grammar["exclusions"])
