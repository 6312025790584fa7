"""Tokenizer shared by the pattern, template and tree-file parsers."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import SpecSyntaxError

IDENT = "IDENT"
CAPTURE = "CAPTURE"
STRING = "STRING"
INT = "INT"
PUNCT = "PUNCT"
EOF = "EOF"

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>--[^\n]*)
  | (?P<capture>@[A-Za-z_][A-Za-z0-9_]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<punct>[()\[\]:,=*+?\-])
    """,
    re.VERBOSE,
)

_ESCAPE_RE = re.compile(r"\\(.)")


@dataclass(frozen=True)
class Token:
    type: str
    value: str
    offset: int
    end: int


def unescape(body: str, pos: tuple[int, int]) -> str:
    def sub(m):
        if m.group(1) not in '"\\':
            raise SpecSyntaxError(f"unknown escape \\{m.group(1)}", *pos)
        return m.group(1)
    return _ESCAPE_RE.sub(sub, body)


def escape(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


class Source:
    """Text assembled from pieces of a larger document.

    Each piece is ``(line, col, text)`` with 1-based ``line`` and ``col`` giving
    where ``text`` starts in the original document, so that positions
    reported for errors point back into it.
    """

    def __init__(self, pieces: Sequence[tuple[int, int, str]]):
        self.pieces = list(pieces) or [(1, 1, "")]
        self.starts = []
        offset = 0
        parts = []
        for _, _, text in self.pieces:
            self.starts.append(offset)
            parts.append(text)
            offset += len(text) + 1
        self.text = "\n".join(parts)

    @classmethod
    def plain(cls, text: str) -> "Source":
        return cls([(i + 1, 1, line) for i, line in enumerate(text.split("\n"))])

    def position(self, offset: int) -> tuple[int, int]:
        index = 0
        for i, start in enumerate(self.starts):
            if start <= offset:
                index = i
            else:
                break
        line, col, text = self.pieces[index]
        return line, col + min(offset - self.starts[index], len(text))

    def slice(self, start: int, end: int) -> str:
        """Source text between two offsets, continuation lines dedented to the first."""
        first_line_start = self.text.rfind("\n", 0, start) + 1
        indent = len(self.text[first_line_start:start]) - len(self.text[first_line_start:start].lstrip())
        lines = self.text[start:end].split("\n")
        out = [lines[0]]
        for line in lines[1:]:
            lead = len(line) - len(line.lstrip(" "))
            out.append(line[min(lead, indent):])
        return "\n".join(out)


class TokenStream:
    def __init__(self, source: Source):
        self.source = source
        self.tokens = self._tokenize(source.text)
        self.index = 0

    def _tokenize(self, text: str) -> list[Token]:
        tokens = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                raise SpecSyntaxError(f"unexpected character {text[pos]!r}", *self.source.position(pos))
            kind = m.lastgroup
            if kind == "string":
                value = unescape(m.group()[1:-1], self.source.position(pos))
                tokens.append(Token(STRING, value, pos, m.end()))
            elif kind not in ("ws", "comment"):
                tokens.append(Token(kind.upper() if kind != "punct" else PUNCT, m.group(), pos, m.end()))
            pos = m.end()
        tokens.append(Token(EOF, "", len(text), len(text)))
        return tokens

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.index + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.index = min(self.index + 1, len(self.tokens) - 1)
        return tok

    def at(self, type_: str, value: Optional[str] = None, ahead: int = 0) -> bool:
        tok = self.peek(ahead)
        return tok.type == type_ and (value is None or tok.value == value)

    def at_punct(self, value: str, ahead: int = 0) -> bool:
        return self.at(PUNCT, value, ahead)

    def accept_punct(self, value: str) -> Optional[Token]:
        if self.at_punct(value):
            return self.next()
        return None

    def expect(self, type_: str, value: Optional[str] = None, what: str = "") -> Token:
        if not self.at(type_, value):
            self.error(f"expected {what or value or type_.lower()}")
        return self.next()

    def error(self, message: str, token: Optional[Token] = None):
        tok = token or self.peek()
        found = "end of input" if tok.type == EOF else repr(tok.value)
        raise SpecSyntaxError(f"{message}, found {found}", *self.source.position(tok.offset))

    def at_end(self) -> bool:
        return self.peek().type == EOF

    def last_end(self) -> int:
        return self.tokens[self.index - 1].end if self.index else 0

    def adjacent(self) -> bool:
        """True when the next token touches the previous one (no whitespace)."""
        return self.index > 0 and self.tokens[self.index - 1].end == self.peek().offset
