"""Universal syntax trees and the construct/kind registry.

Identifiers (construct names, kinds, field labels) compare
case-insensitively; ``canon`` gives the uppercase form used as a key.
Spans use 0-based rows and byte columns, end-exclusive.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional

from .errors import Diagnostic


def canon(name: str) -> str:
    return name.upper()


@dataclass(frozen=True, order=True)
class Point:
    row: int
    col: int

    def __post_init__(self):
        if self.row < 0 or self.col < 0:
            raise ValueError(f"negative coordinate in {self}")


@dataclass(frozen=True)
class Span:
    start: Point
    end: Point

    def __post_init__(self):
        if self.end < self.start:
            raise ValueError(f"span ends before it starts: {self}")

    @classmethod
    def of(cls, r1: int, c1: int, r2: int, c2: int) -> "Span":
        return cls(Point(r1, c1), Point(r2, c2))

    def contains(self, other: "Span") -> bool:
        return self.start <= other.start and other.end <= self.end

    def shifted(self, rows: int) -> "Span":
        return Span(Point(self.start.row + rows, self.start.col),
                    Point(self.end.row + rows, self.end.col))

    def as_list(self) -> list:
        return [[self.start.row, self.start.col], [self.end.row, self.end.col]]

    def __str__(self) -> str:
        return f"[{self.start.row}, {self.start.col}] - [{self.end.row}, {self.end.col}]"


@dataclass(frozen=True)
class UNode:
    """A node of a universal (or concrete) syntax tree.

    ``children`` holds ``(field_label, child)`` pairs; labels may repeat.
    Dataclass equality is exact (spans included); use
    :func:`structural_equals` to ignore spans and identifier case.
    """

    construct_name: str
    children: tuple[tuple[Optional[str], "UNode"], ...] = ()
    leaf_text: Optional[str] = None
    span: Optional[Span] = None

    def __post_init__(self):
        if not self.construct_name:
            raise ValueError("construct_name must be non-empty")
        if self.leaf_text is not None and self.children:
            raise ValueError(f"leaf node {self.construct_name} cannot have children")

    @property
    def key(self) -> str:
        return canon(self.construct_name)

    @property
    def nodes(self) -> tuple["UNode", ...]:
        return tuple(child for _, child in self.children)

    def child_at(self, path: Iterable[int]) -> "UNode":
        node = self
        for index in path:
            node = node.children[index][1]
        return node

    def walk(self, path: tuple[int, ...] = ()) -> Iterator[tuple[tuple[int, ...], "UNode"]]:
        """Pre-order traversal yielding ``(path, node)``."""
        stack = [(path, self)]
        while stack:
            p, node = stack.pop()
            yield p, node
            for i in range(len(node.children) - 1, -1, -1):
                stack.append((p + (i,), node.children[i][1]))


def leaf(name: str, text: str, span: Optional[Span] = None) -> UNode:
    return UNode(name, (), text, span)


def node(name: str, *children, span: Optional[Span] = None) -> UNode:
    """Build a node; each child is a UNode or a ``(label, UNode)`` pair."""
    pairs = tuple(c if isinstance(c, tuple) else (None, c) for c in children)
    return UNode(name, pairs, None, span)


def _labels_equal(a: Optional[str], b: Optional[str]) -> bool:
    if a is None or b is None:
        return a is b
    return canon(a) == canon(b)


def structural_equals(a: UNode, b: UNode) -> bool:
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if x.key != y.key or x.leaf_text != y.leaf_text or len(x.children) != len(y.children):
            return False
        for (la, ca), (lb, cb) in zip(x.children, y.children):
            if not _labels_equal(la, lb):
                return False
            stack.append((ca, cb))
    return True


def strip_spans(tree: UNode) -> UNode:
    return replace(
        tree,
        span=None,
        children=tuple((label, strip_spans(child)) for label, child in tree.children),
    )


def replace_at(tree: UNode, path: tuple[int, ...], new: UNode) -> UNode:
    """Return a copy of ``tree`` with the node at ``path`` swapped for ``new``.

    Raises IndexError when the path does not address a node.
    """
    if not path:
        return new
    index = path[0]
    if not 0 <= index < len(tree.children):
        raise IndexError(index)
    label, child = tree.children[index]
    children = list(tree.children)
    children[index] = (label, replace_at(child, path[1:], new))
    return replace(tree, children=tuple(children))


class Multiplicity(enum.Enum):
    REQUIRED = ""
    OPTIONAL = "?"
    STAR = "*"
    PLUS = "+"

    @property
    def symbol(self) -> str:
        return self.value

    @classmethod
    def from_symbol(cls, symbol: str) -> "Multiplicity":
        return cls(symbol)

    def bounds(self, available: int) -> tuple[int, int]:
        """Smallest and largest run this quantifier may consume."""
        if self is Multiplicity.REQUIRED:
            return 1, 1
        if self is Multiplicity.OPTIONAL:
            return 0, min(1, available)
        if self is Multiplicity.STAR:
            return 0, available
        return 1, available


@dataclass(frozen=True)
class FeatureDef:
    name: str
    type_name: str
    multiplicity: Multiplicity = Multiplicity.REQUIRED


@dataclass(frozen=True)
class ConstructDef:
    """A ``construct`` element. Also used directly as the parsed element."""

    id: str
    kinds: tuple[str, ...] = ()
    features: tuple[FeatureDef, ...] = ()
    comment: str = ""

    element_kind = "construct"

    def feature(self, name: str) -> Optional[FeatureDef]:
        for f in self.features:
            if canon(f.name) == canon(name):
                return f
        return None


@dataclass(frozen=True)
class Registry:
    constructs: dict[str, ConstructDef] = field(default_factory=dict)
    kinds: frozenset[str] = frozenset()
    diagnostics: tuple[Diagnostic, ...] = ()

    def construct(self, name: str) -> Optional[ConstructDef]:
        return self.constructs.get(canon(name))

    def is_kind(self, name: str) -> bool:
        return canon(name) in self.kinds

    def resolves(self, name: str) -> bool:
        key = canon(name)
        return key in self.constructs or key in self.kinds

    def members(self, kind: str) -> list[str]:
        """Construct ids declaring ``kind``, sorted."""
        key = canon(kind)
        return sorted(c.id for c in self.constructs.values()
                      if key in (canon(k) for k in c.kinds))


EMPTY_REGISTRY = Registry()


def node_has_kind(registry: Registry, node: UNode, kind: str,
                  language_constructs: Optional[Iterable[str]] = None) -> bool:
    definition = registry.construct(node.construct_name)
    if definition is None:
        return False
    if canon(kind) not in {canon(k) for k in definition.kinds}:
        return False
    if language_constructs is not None:
        return node.key in {canon(c) for c in language_constructs}
    return True


def validate_registry(constructs: Iterable[ConstructDef]) -> Registry:
    diagnostics: list[Diagnostic] = []
    table: dict[str, ConstructDef] = {}
    for c in constructs:
        key = canon(c.id)
        if key in table:
            diagnostics.append(Diagnostic(
                "DuplicateConstruct", c.id, f"construct {c.id} is defined more than once"))
            continue
        table[key] = c

    declared_kinds = {canon(k) for c in table.values() for k in c.kinds}
    for key in sorted(declared_kinds & table.keys()):
        diagnostics.append(Diagnostic(
            "ConstructKindCollision", table[key].id,
            f"{table[key].id} is used as a kind but has its own construct specification"))
    kinds = frozenset(declared_kinds - table.keys())

    for c in table.values():
        seen: set[str] = set()
        for f in c.features:
            if canon(f.name) in seen:
                diagnostics.append(Diagnostic(
                    "DuplicateFeature", c.id, f"feature {f.name} is declared twice", f.name))
            seen.add(canon(f.name))
            if canon(f.type_name) not in table and canon(f.type_name) not in kinds:
                diagnostics.append(Diagnostic(
                    "UnknownFeatureType", c.id,
                    f"feature {f.name} has type {f.type_name}, which is neither a construct nor a kind",
                    f.name))
    return Registry(table, kinds, tuple(diagnostics))
