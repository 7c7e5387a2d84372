"""Source locations.

Offsets count UTF-8 bytes so that spans survive re-encoding; lines and
columns are 1-based and count code points. End positions are exclusive.
"""

from __future__ import annotations

from dataclasses import dataclass


def _byte_len(ch: str) -> int:
    cp = ord(ch)
    if cp < 0x80:
        return 1
    if cp < 0x800:
        return 2
    if cp < 0x10000:
        return 3
    return 4


@dataclass(frozen=True, order=True)
class SourceSpan:
    file_id: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int
    start_offset: int
    end_offset: int

    def __post_init__(self):
        if self.start_offset > self.end_offset:
            raise ValueError("span start_offset > end_offset")

    def contains(self, other: "SourceSpan") -> bool:
        return (
            self.start_offset <= other.start_offset
            and other.end_offset <= self.end_offset
        )

    def sort_key(self) -> tuple:
        return (self.start_offset, self.end_offset)

    def to_json(self) -> dict:
        return {
            "startLine": self.start_line,
            "startCol": self.start_col,
            "endLine": self.end_line,
            "endCol": self.end_col,
            "startOffset": self.start_offset,
            "endOffset": self.end_offset,
        }

    @staticmethod
    def from_json(obj: dict, file_id: str = "") -> "SourceSpan":
        return SourceSpan(
            file_id=file_id,
            start_line=obj["startLine"],
            start_col=obj["startCol"],
            end_line=obj["endLine"],
            end_col=obj["endCol"],
            start_offset=obj["startOffset"],
            end_offset=obj["endOffset"],
        )


def span_text(source: str, span: SourceSpan) -> str:
    """The exact lexeme a span covers."""
    return source.encode("utf-8")[span.start_offset : span.end_offset].decode("utf-8")


class LineIndex:
    """Byte-offset to (line, col) conversion for one source text."""

    def __init__(self, source: str):
        self._offsets: list[int] = []  # byte offset of each character
        self._lines: list[int] = []
        self._cols: list[int] = []
        off, line, col = 0, 1, 1
        for ch in source:
            self._offsets.append(off)
            self._lines.append(line)
            self._cols.append(col)
            off += _byte_len(ch)
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        self._offsets.append(off)
        self._lines.append(line)
        self._cols.append(col)
        self.total_bytes = off

    def position(self, byte_offset: int) -> tuple[int, int]:
        import bisect

        i = bisect.bisect_right(self._offsets, byte_offset) - 1
        return self._lines[i], self._cols[i]

    def make_span(self, file_id: str, start: int, end: int) -> SourceSpan:
        sl, sc = self.position(start)
        el, ec = self.position(end)
        return SourceSpan(file_id, sl, sc, el, ec, start, end)
