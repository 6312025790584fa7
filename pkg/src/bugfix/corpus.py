"""Unified diff hunks and the before/after code fragments they carry.

Line numbers in hunk headers are 1-based; fragment rows are 0-based so
they line up with span rows in recorded application trees.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace

from .errors import ContextMismatch, DiffSyntaxError

_HUNK_HEADER = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@(.*)$")


class Tag(enum.Enum):
    CONTEXT = " "
    DELETE = "-"
    ADD = "+"


@dataclass(frozen=True)
class Hunk:
    old_start: int
    old_count: int
    new_start: int
    new_count: int
    lines: tuple[tuple[Tag, str], ...] = ()
    section: str = ""

    def __post_init__(self):
        old = sum(1 for tag, _ in self.lines if tag is not Tag.ADD)
        new = sum(1 for tag, _ in self.lines if tag is not Tag.DELETE)
        if old != self.old_count or new != self.new_count:
            raise ValueError(f"hunk counts {self.old_count}/{self.new_count} "
                             f"do not match its lines {old}/{new}")

    @property
    def old_lines(self) -> list[str]:
        return [text for tag, text in self.lines if tag is not Tag.ADD]

    @property
    def new_lines(self) -> list[str]:
        return [text for tag, text in self.lines if tag is not Tag.DELETE]


@dataclass(frozen=True)
class FilePatch:
    old_path: str
    new_path: str
    hunks: list[Hunk] = field(default_factory=list)
    header: tuple[str, ...] = ()


@dataclass(frozen=True)
class Fragment:
    start_row: int
    text: str

    @property
    def lines(self) -> list[str]:
        return self.text.split("\n")[:-1] if self.text else []

    def line(self, row: int) -> str:
        """Text of 0-based file row ``row``."""
        index = row - self.start_row
        if not 0 <= index < len(self.lines):
            raise IndexError(f"row {row} is outside the fragment")
        return self.lines[index]

    def slice(self, span) -> bytes:
        """Bytes covered by a span; columns count UTF-8 bytes."""
        rows = [self.line(r).encode("utf-8") for r in range(span.start.row, span.end.row + 1)]
        if len(rows) == 1:
            return rows[0][span.start.col:span.end.col]
        parts = [rows[0][span.start.col:], *rows[1:-1], rows[-1][:span.end.col]]
        return b"\n".join(parts)


def _strip_path(path: str) -> str:
    path = path.split("\t")[0].strip()
    if path.startswith(("a/", "b/")):
        return path[2:]
    return path


def parse_unified_diff(text: str) -> list[FilePatch]:
    """Parse git-style or plain unified diff text into per-file hunk lists."""
    lines = text.replace("\r\n", "\n").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    files: list[FilePatch] = []
    pending: list[str] = []
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("--- ") and i + 1 < len(lines) and lines[i + 1].startswith("+++ "):
            current = FilePatch(_strip_path(line[4:]), _strip_path(lines[i + 1][4:]), [], tuple(pending))
            files.append(current)
            pending = []
            i += 2
            continue
        m = _HUNK_HEADER.match(line)
        if m:
            if not files:
                raise DiffSyntaxError("hunk before ---/+++ file headers", i + 1)
            hunk, i = _read_hunk(lines, i, m)
            files[-1].hunks.append(hunk)
            continue
        if line.startswith(("diff ", "index ", "new file", "deleted file", "old mode", "new mode",
                            "similarity", "rename ", "Binary files")):
            pending.append(line)
        elif line.strip():
            raise DiffSyntaxError(f"unexpected line {line!r}", i + 1)
        i += 1
    return files


def _read_hunk(lines: list[str], i: int, m: re.Match) -> tuple[Hunk, int]:
    header_line = i + 1
    old_start, new_start = int(m.group(1)), int(m.group(3))
    old_count = int(m.group(2)) if m.group(2) is not None else 1
    new_count = int(m.group(4)) if m.group(4) is not None else 1
    body: list[tuple[Tag, str]] = []
    old_seen = new_seen = 0
    i += 1
    while old_seen < old_count or new_seen < new_count:
        if i >= len(lines) or lines[i].startswith("@@") or lines[i].startswith("diff "):
            raise DiffSyntaxError(
                f"hunk expects {old_count} old and {new_count} new lines, "
                f"found {old_seen} and {new_seen}", header_line)
        line = lines[i]
        if line.startswith("\\"):
            i += 1
            continue
        tag = Tag(line[0]) if line and line[0] in " -+" else None
        if line == "":
            tag, line = Tag.CONTEXT, " "
        if tag is None:
            raise DiffSyntaxError(f"bad hunk line {line!r}", i + 1)
        if tag is not Tag.ADD:
            old_seen += 1
        if tag is not Tag.DELETE:
            new_seen += 1
        if old_seen > old_count or new_seen > new_count:
            raise DiffSyntaxError(
                f"hunk holds more lines than its header declares ({old_count}/{new_count})", i + 1)
        body.append((tag, line[1:]))
        i += 1
    while i < len(lines) and lines[i].startswith("\\"):
        i += 1
    return Hunk(old_start, old_count, new_start, new_count, tuple(body), m.group(5).strip()), i


def _start_row(start: int, count: int) -> int:
    # a zero-length range names the line *before* the change
    return start if count == 0 else start - 1


def _join(lines: list[str]) -> str:
    return "".join(line + "\n" for line in lines)


def before_fragment(hunk: Hunk) -> Fragment:
    return Fragment(hunk.old_start - 1, _join(hunk.old_lines))


def after_fragment(hunk: Hunk) -> Fragment:
    return Fragment(hunk.new_start - 1, _join(hunk.new_lines))


def rebase(hunk: Hunk, old_start: int = 1, new_start: int = 1) -> Hunk:
    return replace(hunk, old_start=old_start, new_start=new_start)


def apply_hunk(before_text: str, hunk: Hunk) -> str:
    """Apply one hunk to text whose first line is line 1 of the hunk's numbering."""
    if not hunk.lines:
        return before_text
    lines = before_text.split("\n")
    trailing_newline = lines[-1] == ""
    if trailing_newline:
        lines.pop()
    at = _start_row(hunk.old_start, hunk.old_count)
    for offset, expected in enumerate(hunk.old_lines):
        row = at + offset
        found = lines[row] if row < len(lines) else None
        if found != expected:
            raise ContextMismatch(row, expected, found)
    out = lines[:at] + hunk.new_lines + lines[at + hunk.old_count:]
    if trailing_newline or not lines:
        return _join(out)
    return "\n".join(out)


def make_hunk(old_lines: list[str], new_lines: list[str], old_start: int = 1) -> Hunk:
    """Hunk turning ``old_lines`` into ``new_lines`` wholesale, with common
    leading and trailing lines kept as context."""
    head = 0
    while head < min(len(old_lines), len(new_lines)) and old_lines[head] == new_lines[head]:
        head += 1
    tail = 0
    while (tail < min(len(old_lines), len(new_lines)) - head
           and old_lines[-1 - tail] == new_lines[-1 - tail]):
        tail += 1
    body = [(Tag.CONTEXT, s) for s in old_lines[:head]]
    body += [(Tag.DELETE, s) for s in old_lines[head:len(old_lines) - tail]]
    body += [(Tag.ADD, s) for s in new_lines[head:len(new_lines) - tail]]
    body += [(Tag.CONTEXT, s) for s in old_lines[len(old_lines) - tail:]]
    return Hunk(old_start, len(old_lines), old_start, len(new_lines), tuple(body))
