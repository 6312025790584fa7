"""Concrete syntax trees to universal construct trees.

A language is a list of mappings; each pairs a query over concrete node
names with a construct template.  Translation is top-down and the first
mapping (in declaration order) whose query matches wins.  Captured nodes
are translated before they are substituted into the template.
"""

from __future__ import annotations

import shlex
import subprocess
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .errors import Diagnostic, PluginError, SpecSyntaxError
from .matcher import Binding, MatchResult, match_at
from .model import EMPTY_REGISTRY, Registry, UNode, canon
from .rewriter import instantiate_node
from .specparse import CaptureRef, LanguageMapping, SpliceRef, captures, template_refs
from .treefile import parse_tree


@dataclass(frozen=True)
class LanguageDef:
    id: str
    mappings: tuple[LanguageMapping, ...] = ()
    comment: str = field(default="", compare=False)

    element_kind = "language"

    @property
    def construct_set(self) -> frozenset[str]:
        return frozenset(canon(m.construct_name) for m in self.mappings)


def group_languages(mappings: Sequence[LanguageMapping]) -> dict[str, LanguageDef]:
    """Collect mappings into one LanguageDef per language, keyed canonically."""
    grouped: dict[str, list[LanguageMapping]] = {}
    names: dict[str, str] = {}
    for m in mappings:
        grouped.setdefault(canon(m.language), []).append(m)
        names.setdefault(canon(m.language), m.language)
    return {key: LanguageDef(names[key], tuple(ms)) for key, ms in grouped.items()}


class _Translator:
    def __init__(self, lang: LanguageDef, registry: Registry):
        self.lang = lang
        self.registry = registry

    def translate(self, node: UNode, parent_names: frozenset[str]) -> UNode:
        for mapping in self.lang.mappings:
            if mapping.context is not None and canon(mapping.context) not in parent_names:
                continue
            results = match_at(mapping.source, node, self.registry)
            if results:
                return self.fire(mapping, node, results[0])
        names = frozenset({node.key})
        children = tuple((label, self.translate(child, names)) for label, child in node.children)
        return replace(node, children=children)

    def fire(self, mapping: LanguageMapping, node: UNode, match: MatchResult) -> UNode:
        names = frozenset({node.key, canon(_template_name(mapping))})
        bindings = {}
        for name, b in match.bindings.items():
            translated = []
            for path, captured in zip(b.paths, b.nodes):
                if path:
                    translated.append(self.translate(captured, names))
                else:
                    # the node itself: translate below it only
                    children = tuple((label, self.translate(c, names)) for label, c in captured.children)
                    translated.append(replace(captured, children=children))
            bindings[name] = Binding(name, tuple(translated), b.paths, b.labels)
        built = instantiate_node(mapping.construct, MatchResult(node, match.path, bindings))
        return replace(built, span=node.span)


def _template_name(mapping: LanguageMapping) -> str:
    return getattr(mapping.construct, "name", mapping.construct_name)


def translate(concrete: UNode, lang: LanguageDef, registry: Registry = EMPTY_REGISTRY) -> UNode:
    return _Translator(lang, registry).translate(concrete, frozenset())


def validate_language(lang: LanguageDef, registry: Registry) -> list[Diagnostic]:
    diagnostics = []
    seen = {}
    for m in lang.mappings:
        ident = m.id or f"{lang.id}_{m.construct_name}"
        if canon(m.construct_name) not in registry.constructs:
            diagnostics.append(Diagnostic(
                "UnknownConstruct", ident,
                f"construct_name {m.construct_name} is not a specified construct"))
        available = {canon(c) for c in captures(m.source)}
        missing = []
        for ref in template_refs(m.construct):
            if isinstance(ref, (CaptureRef, SpliceRef)) and canon(ref.name) not in available:
                if ref.name not in missing:
                    missing.append(ref.name)
        for name in missing:
            diagnostics.append(Diagnostic(
                "UnknownCapture", ident, f"construct template uses {name}, which the source does not capture",
                name))
        key = (canon(m.construct_name), m.context and canon(m.context), m.source)
        if key in seen:
            diagnostics.append(Diagnostic(
                "DuplicateMapping", ident, f"same construct_name and source as {seen[key]}"))
        else:
            seen[key] = ident
    return diagnostics


def run_parser_plugin(command: str | Sequence[str], source: str, language: str,
                      row_offset: int = 0, timeout: float = 60) -> UNode:
    """Parse ``source`` with an external plugin.

    The plugin receives the source text on stdin and the language id as its
    last argument, and must print a tree file on stdout.  Rows in its output
    are relative to the text given; ``row_offset`` shifts them.
    """
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    try:
        proc = subprocess.run(argv + [language], input=source, capture_output=True,
                              text=True, timeout=timeout)
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise PluginError(f"parser plugin {argv[0]!r} could not run: {exc}") from exc
    if proc.returncode != 0:
        raise PluginError(f"parser plugin exited with {proc.returncode}: {proc.stderr.strip()}")
    try:
        tree = parse_tree(proc.stdout)
    except SpecSyntaxError as exc:
        raise PluginError(f"parser plugin printed an unreadable tree: {exc}") from exc
    return shift_rows(tree, row_offset) if row_offset else tree


def shift_rows(tree: UNode, rows: int) -> UNode:
    return replace(
        tree,
        span=tree.span.shifted(rows) if tree.span else None,
        children=tuple((label, shift_rows(child, rows)) for label, child in tree.children),
    )
