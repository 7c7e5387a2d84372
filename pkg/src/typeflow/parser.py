"""Recursive-descent parser with per-statement error recovery.

Statements outside the subset never abort the file: the offending token
range is skipped and recorded as a diagnostic.  Only unrecoverable lexical
corruption (unterminated string or comment) raises ``ParseError``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from .ast_nodes import AstNode, NodeKind
from .errors import Diagnostic, ParseError
from .lexer import Lexer, Token, TokenKind
from .spans import SourceSpan

ASSIGN_OPS = frozenset({"=", "+=", "-=", "*=", "/=", "%="})

# Tokens an annotation may contain; anything else ends it.
_ANNOTATION_ATOMS = frozenset({TokenKind.IDENT, TokenKind.KEYWORD})

# Nesting bound keeps pathological inputs inside statement recovery
# instead of exhausting the interpreter stack.
MAX_NESTING = 200


@dataclass
class ParseResult:
    program: AstNode
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.diagnostics


class _StmtError(Exception):
    def __init__(self, message: str, token: Token):
        super().__init__(message)
        self.message = message
        self.token = token


class _Parser:
    def __init__(self, source: str, file_id: str):
        self.source = source
        self.file_id = file_id
        self.toks = Lexer(source).tokens()
        self.pos = 0
        self.depth = 0
        self.diagnostics: list[Diagnostic] = []

    # -- token plumbing ----------------------------------------------------

    def _peek(self, ahead: int = 0) -> Token:
        j = min(self.pos + ahead, len(self.toks) - 1)
        return self.toks[j]

    def _advance(self) -> Token:
        tok = self.toks[self.pos]
        if tok.kind is not TokenKind.EOF:
            self.pos += 1
        return tok

    def _at(self, text: str) -> bool:
        t = self._peek()
        return t.kind in (TokenKind.PUNCT, TokenKind.KEYWORD) and t.text == text

    def _eat(self, text: str) -> bool:
        if self._at(text):
            self._advance()
            return True
        return False

    def _expect(self, text: str) -> Token:
        if not self._at(text):
            raise _StmtError(f"expected {text!r}", self._peek())
        return self._advance()

    def _span(self, start: Token, end: Token) -> SourceSpan:
        return SourceSpan(
            self.file_id,
            start.line,
            start.col,
            end.end_line,
            end.end_col,
            start.offset,
            end.end_offset,
        )

    def _span_tokens(self, start: Token) -> SourceSpan:
        end = self.toks[max(self.pos - 1, 0)]
        if end.offset < start.offset:
            end = start
        return self._span(start, end)

    # -- entry -------------------------------------------------------------

    def parse_program(self) -> AstNode:
        stmts = self._statements(top_level=True)
        eof = self.toks[-1]
        span = SourceSpan(self.file_id, 1, 1, eof.end_line, eof.end_col, 0, eof.end_offset)
        return AstNode(NodeKind.PROGRAM, span, children=stmts)

    # -- statements --------------------------------------------------------

    def _statements(self, top_level: bool) -> list[AstNode]:
        out: list[AstNode] = []
        while True:
            t = self._peek()
            if t.kind is TokenKind.EOF:
                return out
            if not top_level and self._at("}"):
                return out
            start = t
            before = self.pos
            try:
                out.extend(self._statement())
            except _StmtError as err:
                self.pos = before  # re-skip the whole statement from its start
                self._recover(start, err)
                if self.pos == before:
                    self._advance()  # guarantee progress on stray closers

    def _recover(self, start: Token, err: _StmtError):
        depth = 0
        while True:
            t = self._peek()
            if t.kind is TokenKind.EOF:
                break
            if t.kind is TokenKind.PUNCT and t.text in "([{":
                depth += 1
                self._advance()
                continue
            if t.kind is TokenKind.PUNCT and t.text in ")]}":
                if depth == 0:
                    if t.text == "}":
                        break  # closing brace belongs to an enclosing block
                    self._advance()  # stray closer, discard
                    continue
                depth -= 1
                self._advance()
                if depth == 0 and t.text == "}":
                    break
                continue
            self._advance()
            if depth == 0 and t.kind is TokenKind.PUNCT and t.text == ";":
                break
        span = self._span_tokens(start)
        self.diagnostics.append(Diagnostic(f"skipped statement: {err.message}", span))

    def _statement(self) -> list[AstNode]:
        self.depth += 1
        try:
            if self.depth > MAX_NESTING:
                raise _StmtError("statement nesting too deep", self._peek())
            return self._statement_inner()
        finally:
            self.depth -= 1

    def _statement_inner(self) -> list[AstNode]:
        t = self._peek()
        if t.kind is TokenKind.KEYWORD:
            if t.text in ("var", "let", "const"):
                return self._var_statement()
            if t.text == "function":
                fn = self._function_decl()
                if fn.name is None:
                    raise _StmtError("function statements need a name", t)
                return [fn]
            if t.text == "return":
                return [self._return_stmt()]
            if t.text == "if":
                return [self._if_stmt()]
            if t.text == "import":
                return [self._import_stmt()]
        if t.kind is TokenKind.PUNCT:
            if t.text == "{":
                return [self._block()]
            if t.text == ";":
                self._advance()
                return []
        expr = self._expression()
        if self._peek().kind is TokenKind.PUNCT and self._peek().text in ASSIGN_OPS:
            op = self._advance().text
            if expr.kind not in (NodeKind.IDENTIFIER, NodeKind.MEMBER_ACCESS):
                raise _StmtError("assignment target must be a name or member", t)
            if expr.kind is NodeKind.IDENTIFIER and expr.name == "this":
                raise _StmtError("cannot assign to this", t)
            rhs = self._expression()
            self._adopt_name(expr.name, rhs)
            self._expect(";")
            node = AstNode(
                NodeKind.ASSIGNMENT,
                self._span_tokens(t),
                operator=op,
                children=[expr, rhs],
            )
            return [node]
        self._expect(";")
        return [expr]

    def _var_statement(self) -> list[AstNode]:
        kw = self._advance()
        decls: list[AstNode] = []
        while True:
            name_tok = self._peek()
            if name_tok.kind is not TokenKind.IDENT:
                raise _StmtError("expected variable name", name_tok)
            self._advance()
            annotation = None
            if self._at(":"):
                annotation = self._annotation()
            init = None
            if self._eat("="):
                init = self._expression()
                self._adopt_name(name_tok.text, init)
            children = []
            if annotation is not None:
                children.append(annotation)
            if init is not None:
                children.append(init)
            node = AstNode(
                NodeKind.VAR_DECL,
                self._span_tokens(name_tok),
                name=name_tok.text,
                decl_kind=kw.text,
                children=children,
                annotation=annotation.name if annotation else None,
                name_span=self._span(name_tok, name_tok),
            )
            decls.append(node)
            if not self._eat(","):
                break
        self._expect(";")
        return decls

    def _annotation(self) -> AstNode:
        colon = self._expect(":")
        first = self._peek()
        if first.kind not in _ANNOTATION_ATOMS:
            raise _StmtError("expected type name after ':'", first)
        depth = 0
        last = None
        while True:
            t = self._peek()
            if t.kind is TokenKind.EOF:
                break
            if t.kind in _ANNOTATION_ATOMS:
                last = self._advance()
                continue
            if t.kind is TokenKind.PUNCT:
                if t.text in ("<", "["):
                    depth += 1
                    last = self._advance()
                    continue
                if t.text in (">", "]"):
                    if depth == 0:
                        break
                    depth -= 1
                    last = self._advance()
                    continue
                if t.text in (".",) or (depth > 0 and t.text == ","):
                    last = self._advance()
                    continue
            break
        if last is None:
            raise _StmtError("empty type annotation", first)
        text = self.source.encode("utf-8")[first.offset : last.end_offset].decode("utf-8")
        return AstNode(NodeKind.TYPE_ANNOTATION, self._span(colon, last), name=text)

    def _params(self) -> list[AstNode]:
        self._expect("(")
        params: list[AstNode] = []
        if not self._at(")"):
            while True:
                tok = self._peek()
                if tok.kind is not TokenKind.IDENT:
                    raise _StmtError("expected parameter name", tok)
                self._advance()
                annotation = None
                if self._at(":"):
                    annotation = self._annotation()
                children = [annotation] if annotation else []
                params.append(
                    AstNode(
                        NodeKind.PARAM,
                        self._span_tokens(tok),
                        name=tok.text,
                        children=children,
                        annotation=annotation.name if annotation else None,
                        name_span=self._span(tok, tok),
                    )
                )
                if not self._eat(","):
                    break
        self._expect(")")
        return params

    def _function_decl(self) -> AstNode:
        kw = self._advance()
        name = None
        name_span = None
        if self._peek().kind is TokenKind.IDENT:
            tok = self._advance()
            name = tok.text
            name_span = self._span(tok, tok)
        params = self._params()
        annotation = None
        if self._at(":"):
            annotation = self._annotation()
        body = self._block()
        children = params + ([annotation] if annotation else []) + [body]
        return AstNode(
            NodeKind.FUNCTION_DECL,
            self._span_tokens(kw),
            name=name,
            children=children,
            annotation=annotation.name if annotation else None,
            name_span=name_span,
        )

    def _return_stmt(self) -> AstNode:
        kw = self._advance()
        if self._eat(";"):
            return AstNode(NodeKind.RETURN, self._span_tokens(kw))
        expr = self._expression()
        self._expect(";")
        return AstNode(NodeKind.RETURN, self._span_tokens(kw), children=[expr])

    def _if_stmt(self) -> AstNode:
        kw = self._advance()
        self._expect("(")
        cond = self._expression()
        self._expect(")")
        then = self._branch()
        children = [cond, then]
        if self._eat("else"):
            children.append(self._branch())
        return AstNode(NodeKind.IF, self._span_tokens(kw), children=children)

    def _branch(self) -> AstNode:
        prev = self._peek()
        stmts = self._statement()
        if len(stmts) == 1:
            return stmts[0]
        if stmts:
            span = SourceSpan(
                self.file_id,
                stmts[0].span.start_line,
                stmts[0].span.start_col,
                stmts[-1].span.end_line,
                stmts[-1].span.end_col,
                stmts[0].span.start_offset,
                stmts[-1].span.end_offset,
            )
        else:
            span = self._span(prev, prev)
        return AstNode(NodeKind.BLOCK, span, children=stmts)

    def _block(self) -> AstNode:
        lbrace = self._expect("{")
        stmts = self._statements(top_level=False)
        self._expect("}")
        return AstNode(NodeKind.BLOCK, self._span_tokens(lbrace), children=stmts)

    def _import_stmt(self) -> AstNode:
        kw = self._advance()
        bindings: list[AstNode] = []

        def ident_node() -> AstNode:
            tok = self._peek()
            if tok.kind is not TokenKind.IDENT:
                raise _StmtError("expected import binding", tok)
            self._advance()
            return AstNode(NodeKind.IDENTIFIER, self._span(tok, tok), name=tok.text)

        def named_bindings():
            self._expect("{")
            while not self._at("}"):
                first = ident_node()
                if self._eat("as"):
                    bindings.append(ident_node())
                else:
                    bindings.append(first)
                if not self._eat(","):
                    break
            self._expect("}")

        t = self._peek()
        if t.kind is TokenKind.STRING:
            module = self._advance()
        else:
            if self._at("*"):
                self._advance()
                self._expect("as")
                bindings.append(ident_node())
            elif self._at("{"):
                named_bindings()
            else:
                bindings.append(ident_node())
                if self._eat(","):
                    named_bindings()
            self._expect("from")
            module = self._peek()
            if module.kind is not TokenKind.STRING:
                raise _StmtError("expected module string", module)
            self._advance()
        self._expect(";")
        return AstNode(
            NodeKind.IMPORT,
            self._span_tokens(kw),
            name=module.text[1:-1],
            value=module.text,
            children=bindings,
        )

    # -- expressions ---------------------------------------------------

    def _adopt_name(self, name: str | None, expr: AstNode):
        if name and expr.kind in (NodeKind.ARROW_FUNCTION, NodeKind.FUNCTION_DECL):
            if expr.name is None:
                expr.name = name

    def _expression(self) -> AstNode:
        self.depth += 1
        try:
            if self.depth > MAX_NESTING:
                raise _StmtError("expression nesting too deep", self._peek())
            return self._postfix(self._primary())
        finally:
            self.depth -= 1

    def _primary(self) -> AstNode:
        t = self._peek()
        if t.kind is TokenKind.IDENT:
            if self._peek(1).kind is TokenKind.PUNCT and self._peek(1).text == "=>":
                return self._arrow_from_single(t)
            self._advance()
            return AstNode(NodeKind.IDENTIFIER, self._span(t, t), name=t.text)
        if t.kind is TokenKind.KEYWORD:
            if t.text in ("true", "false"):
                self._advance()
                return AstNode(NodeKind.BOOL_LIT, self._span(t, t), value=t.text)
            if t.text in ("null", "undefined"):
                self._advance()
                return AstNode(NodeKind.NULL_LIT, self._span(t, t), value=t.text)
            if t.text == "this":
                self._advance()
                return AstNode(NodeKind.IDENTIFIER, self._span(t, t), name="this")
            if t.text == "new":
                return self._new_expr()
            if t.text == "function":
                return self._function_decl()
            raise _StmtError(f"unexpected keyword {t.text!r}", t)
        if t.kind is TokenKind.NUMBER:
            self._advance()
            return AstNode(NodeKind.NUMBER_LIT, self._span(t, t), value=t.text)
        if t.kind is TokenKind.STRING:
            self._advance()
            return AstNode(NodeKind.STRING_LIT, self._span(t, t), value=t.text)
        if t.kind is TokenKind.TEMPLATE_SUBST:
            raise _StmtError("template substitution is not supported", t)
        if t.kind is TokenKind.PUNCT:
            if t.text == "(":
                if self._arrow_ahead():
                    return self._arrow_from_params(t)
                self._advance()
                inner = self._expression()
                self._expect(")")
                return inner
            if t.text == "{":
                return self._object_lit()
            if t.text == "[":
                return self._array_lit()
            if t.text == "-" and self._peek(1).kind is TokenKind.NUMBER:
                self._advance()
                num = self._advance()
                return AstNode(NodeKind.NUMBER_LIT, self._span(t, num), value="-" + num.text)
        raise _StmtError(f"unexpected token {t.text!r}", t)

    def _arrow_ahead(self) -> bool:
        depth = 0
        j = self.pos
        while j < len(self.toks):
            tok = self.toks[j]
            if tok.kind is TokenKind.PUNCT:
                if tok.text == "(":
                    depth += 1
                elif tok.text == ")":
                    depth -= 1
                    if depth == 0:
                        nxt = self.toks[j + 1] if j + 1 < len(self.toks) else None
                        return bool(
                            nxt and nxt.kind is TokenKind.PUNCT and nxt.text == "=>"
                        )
            elif tok.kind is TokenKind.EOF:
                return False
            j += 1
        return False

    def _arrow_from_single(self, tok: Token) -> AstNode:
        self._advance()
        param = AstNode(NodeKind.PARAM, self._span(tok, tok), name=tok.text)
        self._expect("=>")
        body = self._arrow_body()
        return AstNode(
            NodeKind.ARROW_FUNCTION, self._span_tokens(tok), children=[param, body]
        )

    def _arrow_from_params(self, start: Token) -> AstNode:
        params = self._params()
        annotation = None
        if self._at(":"):
            annotation = self._annotation()
        self._expect("=>")
        body = self._arrow_body()
        children = params + ([annotation] if annotation else []) + [body]
        return AstNode(
            NodeKind.ARROW_FUNCTION,
            self._span_tokens(start),
            children=children,
            annotation=annotation.name if annotation else None,
        )

    def _arrow_body(self) -> AstNode:
        if self._at("{"):
            return self._block()
        expr = self._expression()
        ret = AstNode(NodeKind.RETURN, expr.span, children=[expr])
        return AstNode(NodeKind.BLOCK, expr.span, children=[ret])

    def _new_expr(self) -> AstNode:
        kw = self._advance()
        callee = self._primary()
        while self._at("."):
            self._advance()
            prop = self._peek()
            if prop.kind not in (TokenKind.IDENT, TokenKind.KEYWORD):
                raise _StmtError("expected property name", prop)
            self._advance()
            callee = AstNode(
                NodeKind.MEMBER_ACCESS,
                self._extend_span(callee.span, prop),
                name=prop.text,
                children=[callee],
            )
        dotted = _dotted_text(callee)
        if dotted is None:
            raise _StmtError("new requires a named constructor", kw)
        args = self._arguments()
        return AstNode(
            NodeKind.NEW,
            self._span_tokens(kw),
            name=dotted,
            children=[callee] + args,
        )

    def _arguments(self) -> list[AstNode]:
        self._expect("(")
        args: list[AstNode] = []
        if not self._at(")"):
            while True:
                args.append(self._expression())
                if not self._eat(","):
                    break
        self._expect(")")
        return args

    def _postfix(self, expr: AstNode) -> AstNode:
        while True:
            t = self._peek()
            if t.kind is not TokenKind.PUNCT:
                return expr
            if t.text == ".":
                self._advance()
                prop = self._peek()
                if prop.kind not in (TokenKind.IDENT, TokenKind.KEYWORD):
                    raise _StmtError("expected property name", prop)
                self._advance()
                expr = AstNode(
                    NodeKind.MEMBER_ACCESS,
                    self._extend_span(expr.span, prop),
                    name=prop.text,
                    children=[expr],
                )
            elif t.text == "[":
                self._advance()
                index = self._expression()
                rb = self._expect("]")
                expr = AstNode(
                    NodeKind.MEMBER_ACCESS,
                    self._extend_span(expr.span, rb),
                    children=[expr, index],
                )
            elif t.text == "(":
                args = self._arguments()
                end = self.toks[self.pos - 1]
                expr = AstNode(
                    NodeKind.CALL,
                    self._extend_span(expr.span, end),
                    name=_callee_name(expr),
                    children=[expr] + args,
                )
            else:
                return expr

    def _extend_span(self, start: SourceSpan, end_tok: Token) -> SourceSpan:
        return SourceSpan(
            self.file_id,
            start.start_line,
            start.start_col,
            end_tok.end_line,
            end_tok.end_col,
            start.start_offset,
            end_tok.end_offset,
        )

    def _object_lit(self) -> AstNode:
        lbrace = self._expect("{")
        values: list[AstNode] = []
        while not self._at("}"):
            key = self._peek()
            if key.kind in (TokenKind.IDENT, TokenKind.KEYWORD):
                self._advance()
                if self._eat(":"):
                    values.append(self._expression())
                else:
                    # Shorthand property: {email} reads the variable email.
                    values.append(
                        AstNode(NodeKind.IDENTIFIER, self._span(key, key), name=key.text)
                    )
            elif key.kind in (TokenKind.STRING, TokenKind.NUMBER):
                self._advance()
                self._expect(":")
                values.append(self._expression())
            else:
                raise _StmtError("expected object key", key)
            if not self._eat(","):
                break
        self._expect("}")
        return AstNode(NodeKind.OBJECT_LIT, self._span_tokens(lbrace), children=values)

    def _array_lit(self) -> AstNode:
        lbrack = self._expect("[")
        values: list[AstNode] = []
        while not self._at("]"):
            values.append(self._expression())
            if not self._eat(","):
                break
        self._expect("]")
        return AstNode(NodeKind.ARRAY_LIT, self._span_tokens(lbrack), children=values)


def _callee_name(expr: AstNode) -> str | None:
    if expr.kind is NodeKind.IDENTIFIER:
        return expr.name
    if expr.kind is NodeKind.MEMBER_ACCESS:
        return expr.name
    return None


def _dotted_text(expr: AstNode) -> str | None:
    if expr.kind is NodeKind.IDENTIFIER:
        return expr.name
    if expr.kind is NodeKind.MEMBER_ACCESS and expr.name:
        base = _dotted_text(expr.children[0])
        return f"{base}.{expr.name}" if base else None
    return None


def parse(source: str, file_id: str = "<mem>") -> ParseResult:
    """Parse ``source`` into a Program AST plus recovery diagnostics."""
    p = _Parser(source, file_id)
    program = p.parse_program()
    return ParseResult(program, p.diagnostics)


def supported_subset() -> dict:
    """Machine-readable description of the accepted grammar."""
    data = resources.files("typeflow.data").joinpath("subset_grammar.json")
    return json.loads(data.read_text(encoding="utf-8"))
