"""Exception types shared across the pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .spans import SourceSpan


class TypeflowError(Exception):
    """Base class for all library errors."""


class ParseError(TypeflowError):
    """Unrecoverable lexical corruption (e.g. unterminated string at EOF)."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, col {col})")
        self.line = line
        self.col = col


class DeclParseError(TypeflowError):
    """Declaration source outside the supported subset."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, col {col})")
        self.line = line
        self.col = col


class LexiconError(TypeflowError):
    """Malformed lexicon file."""


class MalformedOutput(TypeflowError):
    """Backend output that matches neither the tagged nor the sentinel shape."""


class BackendUnavailable(TypeflowError):
    """Remote inference backend cannot be reached."""


class ConflictError(TypeflowError):
    """A prediction contradicts an explicit user annotation."""


class MismatchError(TypeflowError):
    """Two graphs expected to be structurally identical are not."""


@dataclass(frozen=True)
class Diagnostic:
    """A recoverable problem tied to a source location."""

    message: str
    span: "SourceSpan"

    def to_json(self) -> dict:
        return {"message": self.message, "span": self.span.to_json()}
