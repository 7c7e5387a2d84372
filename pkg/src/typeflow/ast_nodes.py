"""AST node model for the supported language subset."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .spans import SourceSpan


class NodeKind(str, Enum):
    PROGRAM = "Program"
    FUNCTION_DECL = "FunctionDecl"
    ARROW_FUNCTION = "ArrowFunction"
    PARAM = "Param"
    VAR_DECL = "VarDecl"
    ASSIGNMENT = "Assignment"
    CALL = "Call"
    NEW = "New"
    MEMBER_ACCESS = "MemberAccess"
    IDENTIFIER = "Identifier"
    STRING_LIT = "StringLit"
    NUMBER_LIT = "NumberLit"
    BOOL_LIT = "BoolLit"
    NULL_LIT = "NullLit"
    OBJECT_LIT = "ObjectLit"
    ARRAY_LIT = "ArrayLit"
    RETURN = "Return"
    BLOCK = "Block"
    IF = "If"
    TYPE_ANNOTATION = "TypeAnnotation"
    IMPORT = "Import"


LITERAL_KINDS = frozenset(
    {
        NodeKind.STRING_LIT,
        NodeKind.NUMBER_LIT,
        NodeKind.BOOL_LIT,
        NodeKind.NULL_LIT,
        NodeKind.OBJECT_LIT,
        NodeKind.ARRAY_LIT,
    }
)

FUNCTION_KINDS = frozenset({NodeKind.FUNCTION_DECL, NodeKind.ARROW_FUNCTION})


@dataclass
class AstNode:
    """One syntax node.

    ``name`` holds the symbol text where one applies (declared name,
    identifier text, accessed member, callee of a ``new``).  ``annotation``
    carries the raw type-annotation text for annotated declarations,
    parameters, and function returns.  ``decl_kind`` is ``var``/``let``/
    ``const`` on VarDecl nodes, ``operator`` the assignment operator on
    Assignment nodes, and ``value`` the raw lexeme of literals and the
    module path of imports.
    """

    kind: NodeKind
    span: SourceSpan
    name: str | None = None
    children: list["AstNode"] = field(default_factory=list)
    annotation: str | None = None
    decl_kind: str | None = None
    operator: str | None = None
    value: str | None = None
    name_span: SourceSpan | None = None  # span of the declared name token

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()

    def to_json(self) -> dict:
        out: dict = {
            "kind": self.kind.value,
            "name": self.name,
            "span": self.span.to_json(),
            "annotation": self.annotation,
            "children": [c.to_json() for c in self.children],
        }
        if self.decl_kind is not None:
            out["declKind"] = self.decl_kind
        if self.operator is not None:
            out["operator"] = self.operator
        if self.value is not None:
            out["value"] = self.value
        return out

    def is_literal(self) -> bool:
        return self.kind in LITERAL_KINDS

    def is_function(self) -> bool:
        return self.kind in FUNCTION_KINDS


def literal_tag(node: AstNode) -> str:
    """Short tag naming a literal's shape (``integer``/``number`` split)."""
    if node.kind is NodeKind.STRING_LIT:
        return "string"
    if node.kind is NodeKind.NUMBER_LIT:
        raw = node.value or ""
        return "integer" if raw.isdigit() else "number"
    if node.kind is NodeKind.BOOL_LIT:
        return "boolean"
    if node.kind is NodeKind.NULL_LIT:
        return "null"
    if node.kind is NodeKind.OBJECT_LIT:
        return "object"
    if node.kind is NodeKind.ARRAY_LIT:
        return "array"
    raise ValueError(f"not a literal: {node.kind}")
