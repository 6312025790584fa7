"""Bug pattern matching over syntax trees.

A pattern that lists children must account for *all* children of the node
it is matched against (exact cover); bug patterns absorb extra children
explicitly with ``(_)*``.  A pattern without children, such as ``(_)``,
says nothing about the node's children.  Quantified children consume consecutive runs.
Alternatives are enumerated with earlier quantifiers trying the shortest
run first, which fixes the order of results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .model import EMPTY_REGISTRY, Registry, UNode, canon, node_has_kind
from .specparse import BUG_CAPTURE, Pattern, PatternChild, captures

Path = tuple[int, ...]
# capture name -> paths relative to the matched node, in document order
_Assignment = dict[str, tuple[Path, ...]]


@dataclass(frozen=True)
class Binding:
    name: str
    nodes: tuple[UNode, ...]
    paths: tuple[Path, ...]
    labels: tuple[Optional[str], ...]

    @property
    def node(self) -> UNode:
        if len(self.nodes) != 1:
            raise ValueError(f"{self.name} is bound to {len(self.nodes)} nodes")
        return self.nodes[0]


@dataclass(frozen=True)
class MatchResult:
    root: UNode
    path: Path
    bindings: dict[str, Binding]

    def __getitem__(self, name: str) -> Binding:
        return self.bindings[name]

    def assignment(self) -> dict[str, tuple[Path, ...]]:
        """Capture name to relative paths; what distinguishes two matches."""
        return {name: b.paths for name, b in self.bindings.items()}


def name_matches(pattern: Pattern, node: UNode, registry: Registry,
                 language_constructs: Optional[Iterable[str]] = None) -> bool:
    if pattern.is_wildcard:
        return True
    if canon(pattern.name) == node.key:
        return True
    return node_has_kind(registry, node, pattern.name, language_constructs)


def _label_ok(child: PatternChild, label: Optional[str]) -> bool:
    return child.field is None or (label is not None and canon(label) == canon(child.field))


def _merge(a: _Assignment, b: _Assignment) -> _Assignment:
    out = dict(a)
    for name, paths in b.items():
        out[name] = out.get(name, ()) + paths
    return out


def _prefixed(assignment: _Assignment, index: int) -> _Assignment:
    return {name: tuple((index,) + p for p in paths) for name, paths in assignment.items()}


class _Matcher:
    def __init__(self, registry: Registry, language_constructs):
        self.registry = registry
        self.language_constructs = language_constructs

    def node(self, pattern: Pattern, node: UNode) -> Iterator[_Assignment]:
        if not name_matches(pattern, node, self.registry, self.language_constructs):
            return
        if not pattern.children:
            yield {}
            return
        yield from self.children(pattern.children, 0, node.children, 0)

    def children(self, pcs, i, kids, j) -> Iterator[_Assignment]:
        if i == len(pcs):
            if j == len(kids):
                yield {}
            return
        pc = pcs[i]
        remaining = len(kids) - j
        reserved = sum(p.quantifier.bounds(remaining)[0] for p in pcs[i + 1:])
        lo, hi = pc.quantifier.bounds(remaining)
        hi = min(hi, remaining - reserved)
        for count in range(lo, hi + 1):
            for run in self.run(pc, kids, j, count):
                for rest in self.children(pcs, i + 1, kids, j + count):
                    yield _merge(run, rest)

    def run(self, pc: PatternChild, kids, j, count) -> Iterator[_Assignment]:
        """Assignments for ``count`` consecutive children starting at ``j``."""
        base: _Assignment = {pc.capture: tuple((j + t,) for t in range(count))} if pc.capture else {}

        def extend(t: int, acc: _Assignment) -> Iterator[_Assignment]:
            if t == count:
                yield acc
                return
            label, kid = kids[j + t]
            if not _label_ok(pc, label):
                return
            for inner in self.node(pc.pattern, kid):
                yield from extend(t + 1, _merge(acc, _prefixed(inner, j + t)))

        yield from extend(0, base)


def _result(pattern: Pattern, node: UNode, path: Path, assignment: _Assignment,
            parent_label: Optional[str]) -> MatchResult:
    full: _Assignment = {name: () for name in captures(pattern)}
    full.update(assignment)
    full[BUG_CAPTURE] = ((),)
    if pattern.capture:
        full[pattern.capture] = ((),) + (assignment.get(pattern.capture, ()))
    bindings = {}
    for name, paths in full.items():
        nodes, labels = [], []
        for p in paths:
            if p:
                parent = node.child_at(p[:-1])
                label, child = parent.children[p[-1]]
            else:
                label, child = parent_label, node
            nodes.append(child)
            labels.append(label)
        bindings[name] = Binding(name, tuple(nodes), paths, tuple(labels))
    return MatchResult(node, path, bindings)


def _key(assignment: _Assignment):
    return tuple(sorted(assignment.items()))


def match_at(pattern: Pattern, node: UNode, registry: Registry = EMPTY_REGISTRY,
             language_constructs: Optional[Iterable[str]] = None, *,
             path: Path = (), parent_label: Optional[str] = None) -> list[MatchResult]:
    if language_constructs is not None:
        language_constructs = {canon(c) for c in language_constructs}
    results, seen = [], set()
    for assignment in _Matcher(registry, language_constructs).node(pattern, node):
        key = _key(assignment)
        if key in seen:
            continue
        seen.add(key)
        results.append(_result(pattern, node, path, assignment, parent_label))
    return results


def find_matches(pattern: Pattern, tree: UNode, registry: Registry = EMPTY_REGISTRY,
                 language_constructs: Optional[Iterable[str]] = None) -> list[MatchResult]:
    """Pre-order search: every node's matches, nested and overlapping ones included."""
    results = []
    stack: list[tuple[Path, Optional[str], UNode]] = [((), None, tree)]
    while stack:
        path, label, node = stack.pop()
        results.extend(match_at(pattern, node, registry, language_constructs,
                                path=path, parent_label=label))
        for i in range(len(node.children) - 1, -1, -1):
            child_label, child = node.children[i]
            stack.append((path + (i,), child_label, child))
    return results
