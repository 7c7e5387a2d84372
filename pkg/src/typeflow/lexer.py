"""Hand-rolled lexer for the language subset."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import ParseError
from .spans import _byte_len


class TokenKind(Enum):
    IDENT = "ident"
    KEYWORD = "keyword"
    NUMBER = "number"
    STRING = "string"
    TEMPLATE_SUBST = "template"  # template literal containing `${...}`
    PUNCT = "punct"
    BAD = "bad"  # character outside the subset; rejected at statement level
    EOF = "eof"


KEYWORDS = frozenset(
    {
        "var",
        "let",
        "const",
        "function",
        "return",
        "if",
        "else",
        "new",
        "import",
        "from",
        "as",
        "true",
        "false",
        "null",
        "undefined",
        "this",
    }
)

# Longest first so that e.g. "=>" wins over "=".  Single-char arithmetic
# and logic operators lex fine but have no expression grammar; statements
# using them are skipped with a diagnostic.
PUNCTUATORS = (
    "...",
    "=>",
    "+=",
    "-=",
    "*=",
    "/=",
    "%=",
    "(",
    ")",
    "{",
    "}",
    "[",
    "]",
    ",",
    ";",
    ":",
    ".",
    "=",
    "<",
    ">",
    "-",
    "+",
    "*",
    "/",
    "%",
    "!",
    "?",
    "&",
    "|",
)


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    line: int
    col: int
    offset: int  # byte offset of first char
    end_line: int
    end_col: int
    end_offset: int  # byte offset one past last char


class Lexer:
    def __init__(self, source: str):
        self.src = source
        self.n = len(source)
        self.i = 0  # char index
        self.offset = 0  # byte offset
        self.line = 1
        self.col = 1

    def _peek(self, ahead: int = 0) -> str:
        j = self.i + ahead
        return self.src[j] if j < self.n else ""

    def _advance(self) -> str:
        ch = self.src[self.i]
        self.i += 1
        self.offset += _byte_len(ch)
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def _mark(self) -> tuple[int, int, int]:
        return self.line, self.col, self.offset

    def tokens(self) -> list[Token]:
        out: list[Token] = []
        while True:
            tok = self.next_token()
            out.append(tok)
            if tok.kind is TokenKind.EOF:
                return out

    def next_token(self) -> Token:
        self._skip_trivia()
        line, col, offset = self._mark()
        if self.i >= self.n:
            return Token(TokenKind.EOF, "", line, col, offset, line, col, offset)
        ch = self._peek()
        if ch.isalpha() or ch in "_$":
            return self._ident(line, col, offset)
        if ch.isdigit():
            return self._number(line, col, offset)
        if ch in "\"'":
            return self._string(line, col, offset, ch)
        if ch == "`":
            return self._template(line, col, offset)
        for p in PUNCTUATORS:
            if self.src.startswith(p, self.i):
                for _ in p:
                    self._advance()
                return self._tok(TokenKind.PUNCT, p, line, col, offset)
        self._advance()
        return self._tok(TokenKind.BAD, ch, line, col, offset)

    def _tok(self, kind: TokenKind, text: str, line: int, col: int, offset: int) -> Token:
        return Token(kind, text, line, col, offset, self.line, self.col, self.offset)

    def _skip_trivia(self):
        while self.i < self.n:
            ch = self._peek()
            if ch in " \t\r\n":
                self._advance()
            elif ch == "/" and self._peek(1) == "/":
                while self.i < self.n and self._peek() != "\n":
                    self._advance()
            elif ch == "/" and self._peek(1) == "*":
                start_line, start_col = self.line, self.col
                self._advance()
                self._advance()
                while True:
                    if self.i >= self.n:
                        raise ParseError("unterminated comment", start_line, start_col)
                    if self._peek() == "*" and self._peek(1) == "/":
                        self._advance()
                        self._advance()
                        break
                    self._advance()
            else:
                return

    def _ident(self, line: int, col: int, offset: int) -> Token:
        start = self.i
        while self.i < self.n and (self._peek().isalnum() or self._peek() in "_$"):
            self._advance()
        text = self.src[start : self.i]
        kind = TokenKind.KEYWORD if text in KEYWORDS else TokenKind.IDENT
        return self._tok(kind, text, line, col, offset)

    def _number(self, line: int, col: int, offset: int) -> Token:
        start = self.i
        while self.i < self.n and self._peek().isdigit():
            self._advance()
        if self._peek() == "." and self._peek(1).isdigit():
            self._advance()
            while self.i < self.n and self._peek().isdigit():
                self._advance()
        if self._peek() in "eE" and (
            self._peek(1).isdigit() or (self._peek(1) in "+-" and self._peek(2).isdigit())
        ):
            self._advance()
            if self._peek() in "+-":
                self._advance()
            while self.i < self.n and self._peek().isdigit():
                self._advance()
        return self._tok(TokenKind.NUMBER, self.src[start : self.i], line, col, offset)

    def _string(self, line: int, col: int, offset: int, quote: str) -> Token:
        start = self.i
        self._advance()
        while True:
            if self.i >= self.n:
                raise ParseError("unterminated string", line, col)
            ch = self._peek()
            if ch == "\n":
                raise ParseError("unterminated string", line, col)
            if ch == "\\":
                self._advance()
                if self.i >= self.n:
                    raise ParseError("unterminated string", line, col)
                self._advance()
                continue
            self._advance()
            if ch == quote:
                break
        return self._tok(TokenKind.STRING, self.src[start : self.i], line, col, offset)

    def _template(self, line: int, col: int, offset: int) -> Token:
        # Substitution-free templates lex as plain strings.  Templates with
        # `${...}` are consumed whole (so later statements still lex) and
        # rejected by the parser with a skipped-statement diagnostic.
        start = self.i
        self._advance()
        has_subst = False
        depth = 0
        while True:
            if self.i >= self.n:
                raise ParseError("unterminated string", line, col)
            ch = self._peek()
            if depth == 0 and ch == "$" and self._peek(1) == "{":
                has_subst = True
                depth = 1
                self._advance()
                self._advance()
                continue
            if depth > 0:
                if ch == "{":
                    depth += 1
                elif ch == "}":
                    depth -= 1
                self._advance()
                continue
            if ch == "\\":
                self._advance()
                if self.i >= self.n:
                    raise ParseError("unterminated string", line, col)
                self._advance()
                continue
            self._advance()
            if ch == "`":
                break
        kind = TokenKind.TEMPLATE_SUBST if has_subst else TokenKind.STRING
        return self._tok(kind, self.src[start : self.i], line, col, offset)
