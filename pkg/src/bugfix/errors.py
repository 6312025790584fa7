"""Exceptions and the diagnostic record shared by all modules."""

from __future__ import annotations

from dataclasses import dataclass


class BugfixError(Exception):
    """Base class for every error raised by this package."""


class SpecSyntaxError(BugfixError):
    """Malformed Bugfix text, tree file or pattern.

    ``line`` and ``col`` are 1-based and point inside the parsed text.
    """

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class DiffSyntaxError(BugfixError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.message = message
        self.line = line


class ContextMismatch(BugfixError):
    def __init__(self, row: int, expected: str, found: str | None):
        super().__init__(f"context mismatch at row {row}: expected {expected!r}, found {found!r}")
        self.row = row
        self.expected = expected
        self.found = found


class RewriteError(BugfixError):
    """Template instantiation or fix application failed."""


class UnboundCapture(RewriteError):
    def __init__(self, name: str):
        super().__init__(f"capture {name} is not bound")
        self.name = name


class UnboundParameter(RewriteError):
    def __init__(self, name: str):
        super().__init__(f"parameter {name} has no value")
        self.name = name


class SpliceOfNonNode(RewriteError):
    def __init__(self, name: str, length: int):
        super().__init__(f"splice base {name} is bound to {length} nodes, expected exactly 1")
        self.name = name
        self.length = length


class PathInvalid(RewriteError):
    def __init__(self, path):
        super().__init__(f"path {list(path)} does not address a node")
        self.path = tuple(path)


class PluginError(BugfixError):
    """An external parser plugin failed or produced unreadable output."""


@dataclass(frozen=True)
class Diagnostic:
    """A validation finding. Diagnostics are data, never raised."""

    code: str
    element_id: str
    message: str
    feature: str | None = None
    level: str = "ERROR"

    def __str__(self) -> str:
        return f"{self.level} {self.element_id}: {self.message}"
