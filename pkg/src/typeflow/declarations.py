"""Type declarations and constraint-based validation of suggestions.

Declarations come from a restricted declaration-file subset
(``interface X { ... }`` / ``declare class X extends Y { ... }``) or a
JSON stub format.  A suggested type is consistent with a slice when every
method the slice invokes on the target exists (at a compatible arity) on
the suggested type or one of its supertypes, and every accessed member is
a known property or method.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .errors import DeclParseError
from .lexer import Lexer, Token, TokenKind
from .slicing import CallRole, UsageSlice
from .typenames import normalize


@dataclass(frozen=True)
class MethodSig:
    name: str
    min_arity: int
    max_arity: int


@dataclass
class TypeDeclaration:
    name: str
    methods: dict[str, MethodSig] = field(default_factory=dict)
    properties: dict[str, str | None] = field(default_factory=dict)
    supertypes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "methods": [
                {"name": m.name, "minArity": m.min_arity, "maxArity": m.max_arity}
                for m in self.methods.values()
            ],
            "properties": [
                {"name": n, "type": t} for n, t in self.properties.items()
            ],
            "extends": list(self.supertypes),
        }


# Alternate spellings of the builtin types: the model vocabulary uses
# lower-case primitives, the propagation pass canonical sentinel names.
_BUILTIN_ALIASES = {
    "string": "String",
    "number": "Number",
    "boolean": "Boolean",
    "object": "Object",
    "__ecma.String": "String",
    "__ecma.Number": "Number",
    "__ecma.Integer": "Number",
    "__ecma.Boolean": "Boolean",
    "__ecma.Object": "Object",
    "__ecma.Array": "Array",
    "__ecma.Function": "Function",
}


class DeclarationRegistry:
    """Case-sensitive name -> declaration lookup with supertype chains."""

    def __init__(self, preload_builtins: bool = True):
        self._decls: dict[str, TypeDeclaration] = {}
        if preload_builtins:
            for decl in load_builtin_declarations():
                self.add(decl)
            for alias, target in _BUILTIN_ALIASES.items():
                if target in self._decls:
                    self._decls[alias] = self._decls[target]

    def add(self, decl: TypeDeclaration):
        self._decls[decl.name] = decl

    def get(self, name: str) -> TypeDeclaration | None:
        return self._decls.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self._decls

    def names(self) -> list[str]:
        return sorted(self._decls)

    def _chain(self, name: str) -> list[TypeDeclaration]:
        out: list[TypeDeclaration] = []
        seen: set[str] = set()
        stack = [name]
        while stack:
            current = stack.pop(0)
            if current in seen:
                continue  # acyclic guard
            seen.add(current)
            decl = self._decls.get(current)
            if decl is None:
                continue
            out.append(decl)
            stack.extend(decl.supertypes)
        return out

    def find_method(self, type_name: str, method: str) -> MethodSig | None:
        for decl in self._chain(type_name):
            if method in decl.methods:
                return decl.methods[method]
        return None

    def has_member(self, type_name: str, member: str) -> bool:
        for decl in self._chain(type_name):
            if member in decl.methods or member in decl.properties:
                return True
        return False


class ValidationStatus(str, Enum):
    CONSISTENT = "Consistent"
    VIOLATION = "Violation"
    UNKNOWN_TYPE = "UnknownType"


@dataclass(frozen=True)
class Verdict:
    status: ValidationStatus
    details: tuple[str, ...] = ()

    @property
    def consistent(self) -> bool:
        return self.status is ValidationStatus.CONSISTENT

    def to_json(self) -> dict:
        return {"status": self.status.value, "details": list(self.details)}


def validate(slice_: UsageSlice, suggestion: str, registry: DeclarationRegistry) -> Verdict:
    """Check a suggested type against what the slice's target does."""
    assert normalize(suggestion) not in ("any", "null", "undefined", "void"), (
        "unhelpful suggestions must be filtered before validation"
    )
    if suggestion not in registry:
        return Verdict(ValidationStatus.UNKNOWN_TYPE)
    problems: list[str] = []
    for call in slice_.calls:
        if call.role is not CallRole.INVOKED_ON:
            continue
        if call.callee.startswith("new ") or call.callee == slice_.target.symbol:
            continue  # constructor / self-invocation carries no member name
        sig = registry.find_method(suggestion, call.callee)
        if sig is None:
            problems.append(f"{call.callee} not in {suggestion}")
            continue
        k = len(call.observed_arg_types)
        if not (sig.min_arity <= k <= sig.max_arity):
            problems.append(
                f"{suggestion}.{call.callee} arity {sig.min_arity}..{sig.max_arity} "
                f"does not admit {k} arguments"
            )
    for member in slice_.members:
        if not registry.has_member(suggestion, member.name):
            problems.append(f"{member.name} not a member of {suggestion}")
    if problems:
        return Verdict(ValidationStatus.VIOLATION, tuple(problems))
    return Verdict(ValidationStatus.CONSISTENT)


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------


class DeclFormat(str, Enum):
    DTS_SUBSET = "dts-subset"
    JSON_STUB = "json-stub"


def load_declarations(source: str, format: DeclFormat | str = DeclFormat.DTS_SUBSET) -> list[TypeDeclaration]:
    fmt = DeclFormat(format)
    if fmt is DeclFormat.JSON_STUB:
        return _load_json_stub(source)
    return _DtsParser(source).parse()


def _load_json_stub(source: str) -> list[TypeDeclaration]:
    try:
        obj = json.loads(source)
    except json.JSONDecodeError as e:
        raise DeclParseError(f"bad JSON stub: {e.msg}", e.lineno, e.colno) from e
    decls = []
    for t in obj.get("types", []):
        decl = TypeDeclaration(name=t["name"])
        for m in t.get("methods", []):
            decl.methods[m["name"]] = MethodSig(
                m["name"], m.get("minArity", 0), m.get("maxArity", m.get("minArity", 0))
            )
        for p in t.get("properties", []):
            decl.properties[p["name"]] = p.get("type")
        decl.supertypes = list(t.get("extends", []))
        decls.append(decl)
    return decls


class _DtsParser:
    def __init__(self, source: str):
        try:
            self.toks = Lexer(source).tokens()
        except Exception as e:  # lexical corruption
            raise DeclParseError(str(e), 1, 1) from e
        self.pos = 0

    def _peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def _advance(self) -> Token:
        tok = self.toks[self.pos]
        if tok.kind is not TokenKind.EOF:
            self.pos += 1
        return tok

    def _fail(self, message: str) -> DeclParseError:
        t = self._peek()
        return DeclParseError(message, t.line, t.col)

    def _at_word(self, word: str) -> bool:
        t = self._peek()
        return t.kind in (TokenKind.IDENT, TokenKind.KEYWORD) and t.text == word

    def _eat_word(self, word: str) -> bool:
        if self._at_word(word):
            self._advance()
            return True
        return False

    def _expect_punct(self, text: str) -> Token:
        t = self._peek()
        if t.kind is not TokenKind.PUNCT or t.text != text:
            raise self._fail(f"expected {text!r}")
        return self._advance()

    def _ident(self) -> str:
        t = self._peek()
        if t.kind not in (TokenKind.IDENT, TokenKind.KEYWORD):
            raise self._fail("expected a name")
        self._advance()
        return t.text

    def parse(self) -> list[TypeDeclaration]:
        decls = []
        while self._peek().kind is not TokenKind.EOF:
            decls.append(self._declaration())
        return decls

    def _declaration(self) -> TypeDeclaration:
        self._eat_word("export")
        self._eat_word("declare")
        if not (self._eat_word("interface") or self._eat_word("class")):
            raise self._fail("expected 'interface' or 'declare class'")
        name = self._ident()
        decl = TypeDeclaration(name=name)
        if self._peek().kind is TokenKind.PUNCT and self._peek().text == "<":
            raise self._fail("generic declarations are outside the subset")
        if self._eat_word("extends") or self._eat_word("implements"):
            decl.supertypes.append(self._ident())
            while self._peek().kind is TokenKind.PUNCT and self._peek().text == ",":
                self._advance()
                decl.supertypes.append(self._ident())
        self._expect_punct("{")
        while not (self._peek().kind is TokenKind.PUNCT and self._peek().text == "}"):
            if self._peek().kind is TokenKind.EOF:
                raise self._fail("unterminated declaration body")
            self._member(decl)
        self._advance()  # }
        return decl

    def _member(self, decl: TypeDeclaration):
        name = self._ident()
        optional_member = False
        if self._peek().kind is TokenKind.PUNCT and self._peek().text == "?":
            self._advance()
            optional_member = True
        t = self._peek()
        if t.kind is TokenKind.PUNCT and t.text == "(":
            min_arity, max_arity = self._parameters()
            if self._peek().kind is TokenKind.PUNCT and self._peek().text == ":":
                self._advance()
                self._type_text()
            if name in decl.methods or name in decl.properties:
                raise self._fail(f"duplicate member {name!r} (overloads unsupported)")
            decl.methods[name] = MethodSig(name, min_arity, max_arity)
        elif t.kind is TokenKind.PUNCT and t.text == ":":
            self._advance()
            type_text = self._type_text()
            if name in decl.methods or name in decl.properties:
                raise self._fail(f"duplicate member {name!r}")
            decl.properties[name] = type_text
        else:
            raise self._fail("expected ':' or '(' after member name")
        _ = optional_member
        while self._peek().kind is TokenKind.PUNCT and self._peek().text in (";", ","):
            self._advance()

    def _parameters(self) -> tuple[int, int]:
        self._expect_punct("(")
        min_arity = 0
        max_arity = 0
        while not (self._peek().kind is TokenKind.PUNCT and self._peek().text == ")"):
            if self._peek().kind is TokenKind.EOF:
                raise self._fail("unterminated parameter list")
            self._ident()
            optional = False
            if self._peek().kind is TokenKind.PUNCT and self._peek().text == "?":
                self._advance()
                optional = True
            if self._peek().kind is TokenKind.PUNCT and self._peek().text == ":":
                self._advance()
                self._type_text()
            max_arity += 1
            if not optional:
                min_arity = max_arity
            if self._peek().kind is TokenKind.PUNCT and self._peek().text == ",":
                self._advance()
        self._advance()  # )
        return min_arity, max_arity

    def _type_text(self) -> str:
        parts = []
        depth = 0
        while True:
            t = self._peek()
            if t.kind is TokenKind.EOF:
                break
            if t.kind in (TokenKind.IDENT, TokenKind.KEYWORD, TokenKind.NUMBER, TokenKind.STRING):
                parts.append(t.text)
                self._advance()
                continue
            if t.kind is TokenKind.PUNCT:
                if t.text in ("<", "["):
                    depth += 1
                    parts.append(t.text)
                    self._advance()
                    continue
                if t.text in (">", "]"):
                    if depth == 0:
                        break
                    depth -= 1
                    parts.append(t.text)
                    self._advance()
                    continue
                if t.text == "." or (depth > 0 and t.text == ","):
                    parts.append(t.text)
                    self._advance()
                    continue
            break
        if not parts:
            raise self._fail("expected a type")
        return "".join(parts)


_BUILTIN_CACHE: list[TypeDeclaration] | None = None


def load_builtin_declarations() -> list[TypeDeclaration]:
    """Core builtin declarations shipped with the package."""
    global _BUILTIN_CACHE
    if _BUILTIN_CACHE is None:
        from importlib import resources

        text = resources.files("typeflow.data").joinpath("builtin_types.d.ts").read_text()
        _BUILTIN_CACHE = _DtsParser(text).parse()
    return list(_BUILTIN_CACHE)
