"""Repository loading, cross-reference validation, and the JSON/HTML catalog.

Every element lives in one of seven collections.  Keys are canonical
(uppercase) ids; emitted files use lowercased ids as path segments.
"""

from __future__ import annotations

import html
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .corpus import parse_unified_diff
from .errors import Diagnostic, DiffSyntaxError
from .mapper import LanguageDef, group_languages, validate_language
from .model import ConstructDef, Registry, canon, validate_registry
from .rewriter import check_fix_captures
from .specparse import (
    ApplicationSpec, BugSpec, CaptureRef, ConstructTemplate, ExampleSpec, FixSpec, LanguageMapping,
    ParamRef, Pattern, RecordedTree, SpliceRef, StringLeaf, Template, captures, format_recorded_tree,
    format_template, parse_document_recovering, serialize,
)

COLLECTIONS = ("bugs", "fixes", "applications", "examples", "constructs", "kinds", "languages")

_COLLECTION_OF = {
    "bug": "bugs", "fix": "fixes", "application": "applications", "example": "examples",
    "construct": "constructs", "language": "languages",
}


@dataclass(frozen=True)
class KindDef:
    """A kind, synthesized from the constructs that declare it."""

    id: str
    constructs: tuple[str, ...]

    element_kind = "kind"


@dataclass
class Database:
    collections: dict[str, dict[str, object]] = field(
        default_factory=lambda: {name: {} for name in COLLECTIONS})
    registry: Registry = field(default_factory=Registry)
    # reverse links, canonical ids on both sides
    fixes_of_bug: dict[str, list[str]] = field(default_factory=dict)
    applications_of_fix: dict[str, list[str]] = field(default_factory=dict)
    applications_of_example: dict[str, list[str]] = field(default_factory=dict)

    def __getitem__(self, collection: str) -> dict[str, object]:
        return self.collections[collection]

    def get(self, collection: str, ident: str):
        return self.collections[collection].get(canon(ident))

    @property
    def bugs(self) -> dict[str, BugSpec]:
        return self.collections["bugs"]

    @property
    def fixes(self) -> dict[str, FixSpec]:
        return self.collections["fixes"]

    @property
    def applications(self) -> dict[str, ApplicationSpec]:
        return self.collections["applications"]

    @property
    def examples(self) -> dict[str, ExampleSpec]:
        return self.collections["examples"]

    @property
    def constructs(self) -> dict[str, ConstructDef]:
        return self.collections["constructs"]

    @property
    def kinds(self) -> dict[str, KindDef]:
        return self.collections["kinds"]

    @property
    def languages(self) -> dict[str, LanguageDef]:
        return self.collections["languages"]

    def language_constructs(self, language: str) -> Optional[frozenset[str]]:
        lang = self.languages.get(canon(language))
        return lang.construct_set if lang else None


# -- loading ------------------------------------------------------------------------

def spec_files(root: Path) -> list[Path]:
    return sorted(p for p in Path(root).rglob("*.bugfix") if p.is_file())


def load_repository(root, files: Optional[Iterable[Path]] = None) -> tuple[Database, list[Diagnostic]]:
    root = Path(root)
    diagnostics: list[Diagnostic] = []
    elements = []
    for path in files if files is not None else spec_files(root):
        where = os.path.relpath(path, root) if root in Path(path).parents else str(path)
        try:
            text = Path(path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            diagnostics.append(Diagnostic("IoError", where, str(exc)))
            continue
        parsed, errors = parse_document_recovering(text)
        for err in errors:
            diagnostics.append(Diagnostic("SyntaxError", f"{where}:{err.line}:{err.col}", err.message))
        elements.extend(parsed)
    db = build_database(elements, diagnostics)
    return db, diagnostics


def build_database(elements: Iterable, diagnostics: Optional[list[Diagnostic]] = None) -> Database:
    """Validate parsed elements and index them.  Findings are appended to
    ``diagnostics``; elements with dangling references are left out."""
    if diagnostics is None:
        diagnostics = []
    staged: dict[str, dict[str, object]] = {name: {} for name in COLLECTIONS}
    mappings: list[LanguageMapping] = []
    for element in elements:
        if isinstance(element, LanguageMapping):
            mappings.append(element)
            continue
        table = staged[_COLLECTION_OF[element.element_kind]]
        key = canon(element.id)
        if key in table:
            diagnostics.append(Diagnostic(
                "DuplicateElement", element.id,
                f"{element.element_kind} {element.id} is defined more than once; the first definition is kept"))
            continue
        table[key] = element

    db = Database()
    registry = validate_registry(staged["constructs"].values())
    diagnostics.extend(registry.diagnostics)
    db.registry = registry
    db.collections["constructs"] = dict(registry.constructs)
    db.collections["kinds"] = {k: KindDef(k, tuple(registry.members(k))) for k in sorted(registry.kinds)}

    languages = group_languages(mappings)
    for lang in languages.values():
        diagnostics.extend(validate_language(lang, registry))
    db.collections["languages"] = languages

    db.collections["bugs"] = dict(staged["bugs"])
    for key, fix in staged["fixes"].items():
        bug = db.bugs.get(canon(fix.bug_id))
        if bug is None:
            diagnostics.append(_dangling(fix.id, "bug", fix.bug_id))
            continue
        diagnostics.extend(check_fix_captures(fix, bug))
        db.fixes[key] = fix
        db.fixes_of_bug.setdefault(canon(bug.id), []).append(key)

    for key, example in staged["examples"].items():
        try:
            files = parse_unified_diff(example.hunk)
        except DiffSyntaxError as exc:
            diagnostics.append(Diagnostic("DiffSyntaxError", example.id, str(exc)))
            continue
        if not files or not files[0].hunks:
            diagnostics.append(Diagnostic("EmptyHunk", example.id, "hunk clause holds no diff hunk"))
            continue
        if len(files) > 1:
            diagnostics.append(Diagnostic(
                "MultiFileHunk", example.id,
                f"hunk covers {len(files)} files; only {files[0].new_path} is verified", level="WARNING"))
        db.examples[key] = example

    for key, app in staged["applications"].items():
        fix = db.fixes.get(canon(app.fix_id))
        if fix is None:
            diagnostics.append(_dangling(app.id, "fix", app.fix_id))
            continue
        if app.example_id is not None and canon(app.example_id) not in db.examples:
            diagnostics.append(_dangling(app.id, "example", app.example_id))
            continue
        supplied = {canon(name) for name, _ in app.parameters}
        for p in fix.parameters:
            if canon(p.name) not in supplied:
                diagnostics.append(Diagnostic(
                    "MissingParameter", app.id, f"no value for parameter {p.name} of fix {fix.id}", p.name))
        db.applications[key] = app
        db.applications_of_fix.setdefault(canon(fix.id), []).append(key)
        if app.example_id is not None:
            db.applications_of_example.setdefault(canon(app.example_id), []).append(key)
    return db


def _dangling(ident: str, what: str, target: str) -> Diagnostic:
    return Diagnostic("DanglingReference", ident, f"refers to {what} {target}, which is not defined")


# -- JSON ---------------------------------------------------------------------------

def _lower(ident: str) -> str:
    return ident.lower()


def pattern_json(pattern: Pattern) -> dict:
    out: dict = {"type": pattern.name}
    if pattern.children:
        children = []
        for child in pattern.children:
            c: dict = {}
            if child.field:
                c["field"] = child.field
            c["node"] = pattern_json(child.pattern)
            if child.capture:
                c["name"] = child.capture
            if child.quantifier.symbol:
                c["quantifier"] = child.quantifier.symbol
            children.append(c)
        out["children"] = children
    if pattern.capture:
        out["name"] = pattern.capture
    return out


def template_json(template: Template) -> dict:
    if isinstance(template, CaptureRef):
        return {"capture": template.name}
    if isinstance(template, ParamRef):
        return {"parameter": template.name}
    if isinstance(template, StringLeaf):
        return {"text": template.text}
    if isinstance(template, SpliceRef):
        return {"splice": template.name}
    out: dict = {"type": template.name}
    if template.splice_base:
        out["splice_base"] = template.splice_base
    if template.children:
        children = []
        for label, child in template.children:
            c: dict = {"field": label} if label else {}
            c["node"] = template_json(child)
            children.append(c)
        out["children"] = children
    return out


def recorded_json(tree: RecordedTree) -> dict:
    out: dict = {"type": tree.type_name, "span": tree.span.as_list()}
    if tree.field:
        out["field"] = tree.field
    if tree.capture:
        out["name"] = tree.capture
    if tree.children:
        out["children"] = [recorded_json(c) for c in tree.children]
    return out


def _parameters_json(params) -> list[dict]:
    return [{"name": p.name, "type": p.type_name} for p in params]


def element_json(db: Database, collection: str, element) -> dict:
    key = canon(element.id)
    out: dict = {"id": _lower(element.id)}
    comment = getattr(element, "comment", "")
    if comment:
        out["comment"] = comment
    if collection == "bugs":
        if element.parameters:
            out["parameters"] = _parameters_json(element.parameters)
        out["where"] = pattern_json(element.where)
        out["where_raw"] = element.where_raw
        out["fixes"] = [_lower(db.fixes[f].id) for f in db.fixes_of_bug.get(key, [])]
    elif collection == "fixes":
        out["bug_id"] = _lower(db.bugs[canon(element.bug_id)].id)
        if element.parameters:
            out["parameters"] = _parameters_json(element.parameters)
        out["then"] = template_json(element.then)
        out["then_raw"] = element.then_raw or format_template(element.then)
        out["applications"] = [_lower(db.applications[a].id) for a in db.applications_of_fix.get(key, [])]
    elif collection == "applications":
        out["fix_id"] = _lower(db.fixes[canon(element.fix_id)].id)
        if element.example_id is not None:
            out["example_id"] = _lower(db.examples[canon(element.example_id)].id)
        if element.tree is not None:
            out["tree"] = recorded_json(element.tree)
            out["tree_raw"] = format_recorded_tree(element.tree)
        out["parameters"] = [{"name": name, "value": template_json(value), "value_raw": format_template(value)}
                             for name, value in element.parameters]
        out["detached"] = element.detached
    elif collection == "examples":
        out["repository"] = element.repository
        out["before"] = element.before
        out["after"] = element.after
        out["language"] = element.language
        out["hunk"] = element.hunk
        out["files"] = [
            {"old_path": f.old_path, "new_path": f.new_path,
             "hunks": [{"old_start": h.old_start, "old_count": h.old_count,
                        "new_start": h.new_start, "new_count": h.new_count} for h in f.hunks]}
            for f in element.files()]
        out["applications"] = [_lower(db.applications[a].id)
                               for a in db.applications_of_example.get(key, [])]
    elif collection == "constructs":
        out["kinds"] = [_lower(k) for k in element.kinds]
        out["features"] = [
            {"name": f.name, "type": _lower(f.type_name),
             **({"multiplicity": f.multiplicity.symbol} if f.multiplicity.symbol else {})}
            for f in element.features]
    elif collection == "kinds":
        out["constructs"] = [_lower(c) for c in element.constructs]
    elif collection == "languages":
        out["mappings"] = [_mapping_json(m) for m in element.mappings]
        out["constructs"] = sorted(_lower(c) for c in element.construct_set)
    return out


def _mapping_json(m: LanguageMapping) -> dict:
    out: dict = {"construct_name": _lower(m.construct_name)}
    if m.context:
        out["context"] = m.context
    out["source"] = pattern_json(m.source)
    out["source_raw"] = m.source_raw
    out["construct"] = template_json(m.construct)
    out["construct_raw"] = m.construct_raw or format_template(m.construct)
    return out


_SUMMARY_FIELDS = {
    "bugs": ("fixes",),
    "fixes": ("bug_id",),
    "applications": ("fix_id", "example_id"),
    "examples": ("repository", "language", "applications"),
    "constructs": ("kinds",),
    "kinds": ("constructs",),
    "languages": ("constructs",),
}


def summary_json(full: dict, collection: str) -> dict:
    out = {"id": full["id"]}
    if full.get("comment"):
        out["comment"] = full["comment"].split("\n")[0]
    for name in _SUMMARY_FIELDS[collection]:
        if name in full:
            out[name] = full[name]
    return out


def _dump(value) -> str:
    return json.dumps(value, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _write(path: Path, text: str, manifest: list[str], out_dir: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    manifest.append(path.relative_to(out_dir).as_posix())


def _sorted_elements(db: Database, collection: str):
    return sorted(db[collection].values(), key=lambda e: _lower(e.id))


def emit_json(db: Database, out_dir) -> list[str]:
    out_dir = Path(out_dir)
    manifest: list[str] = []
    for collection in COLLECTIONS:
        index = {}
        for element in _sorted_elements(db, collection):
            full = element_json(db, collection, element)
            index[full["id"]] = summary_json(full, collection)
            _write(out_dir / collection / f"{full['id']}.json", _dump(full), manifest, out_dir)
        _write(out_dir / f"{collection}.json", _dump(index), manifest, out_dir)
    return manifest


# -- HTML ---------------------------------------------------------------------------

_PAGE = """<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>{title}</title>
</head>
<body>
<nav>{nav}</nav>
<h1>{title}</h1>
{body}
</body>
</html>
"""

_TOKEN = re.compile(r"@\w+|[A-Za-z_]\w*")


def _nav(depth: int) -> str:
    up = "../" * depth
    links = [f'<a href="{up}index.html">index</a>']
    links += [f'<a href="{up}{c}.html">{c}</a>' for c in COLLECTIONS]
    return " | ".join(links)


def _page(title: str, body: str, depth: int) -> str:
    return _PAGE.format(title=html.escape(title), nav=_nav(depth), body=body)


def _element_href(collection: str, ident: str, depth: int) -> str:
    return f"{'../' * depth}{collection}/{_lower(ident)}.html"


class _Linker:
    """Turns identifiers in spec text into links to the elements they name."""

    # a name can denote several elements; the first collection wins
    _ORDER = ("bugs", "fixes", "applications", "examples", "constructs", "kinds", "languages")

    def __init__(self, db: Database):
        self.targets: dict[str, tuple[str, str]] = {}
        for collection in self._ORDER:
            for key, element in db[collection].items():
                self.targets.setdefault(key, (collection, element.id))

    def link(self, text: str, own: str, captures: Iterable[str] = ()) -> str:
        capture_set = set(captures)
        out, pos = [], 0
        for m in _TOKEN.finditer(text):
            out.append(html.escape(text[pos:m.start()]))
            word = m.group(0)
            pos = m.end()
            if word.startswith("@") and word in capture_set:
                out.append(f'<a href="#capture-{word[1:]}">{html.escape(word)}</a>')
                continue
            target = self.targets.get(canon(word))
            if target is not None and canon(word) != canon(own):
                out.append(f'<a href="{_element_href(target[0], target[1], 1)}">{html.escape(word)}</a>')
            else:
                out.append(html.escape(word))
        out.append(html.escape(text[pos:]))
        return "".join(out)


def _links_list(items: list[tuple[str, str]], depth: int) -> str:
    if not items:
        return "<p>none</p>"
    rows = "".join(f'<li><a href="{_element_href(c, i, depth)}">{html.escape(_lower(i))}</a></li>'
                   for c, i in items)
    return f"<ul>{rows}</ul>"


def _element_body(db: Database, linker: _Linker, collection: str, element) -> str:
    key = canon(element.id)
    parts = []
    if collection == "kinds":
        parts.append("<h2>Constructs</h2>")
        parts.append(_links_list([("constructs", c) for c in element.constructs], 1))
        return "\n".join(parts)
    if collection == "languages":
        text = "\n".join(serialize(m) for m in element.mappings)
    else:
        text = serialize(element)
    names: list[str] = []
    if collection == "bugs":
        names = captures(element.where)
    parts.append(f"<pre>{linker.link(text, element.id, names)}</pre>")
    if names:
        parts.append("<h2>Captures</h2>")
        parts.append("<ul>" + "".join(f'<li id="capture-{n[1:]}">{html.escape(n)}</li>' for n in names) + "</ul>")
    if collection == "bugs":
        parts.append("<h2>Fixes</h2>")
        parts.append(_links_list([("fixes", db.fixes[f].id) for f in db.fixes_of_bug.get(key, [])], 1))
    elif collection == "fixes":
        parts.append("<h2>Bug</h2>")
        parts.append(_links_list([("bugs", element.bug_id)], 1))
        parts.append("<h2>Applications</h2>")
        parts.append(_links_list([("applications", db.applications[a].id)
                                  for a in db.applications_of_fix.get(key, [])], 1))
    elif collection == "applications":
        parts.append("<h2>Fix</h2>")
        parts.append(_links_list([("fixes", element.fix_id)], 1))
        parts.append("<h2>Example</h2>")
        parts.append(_links_list([("examples", element.example_id)] if element.example_id else [], 1))
    elif collection == "examples":
        parts.append("<h2>Applications</h2>")
        parts.append(_links_list([("applications", db.applications[a].id)
                                  for a in db.applications_of_example.get(key, [])], 1))
    elif collection == "constructs":
        parts.append("<h2>Kinds</h2>")
        parts.append(_links_list([("kinds", k) for k in element.kinds if canon(k) in db.kinds], 1))
    return "\n".join(parts)


def emit_html(db: Database, out_dir) -> list[str]:
    out_dir = Path(out_dir)
    manifest: list[str] = []
    linker = _Linker(db)
    home = "<ul>" + "".join(
        f'<li><a href="{c}.html">{c}</a> ({len(db[c])})</li>' for c in COLLECTIONS) + "</ul>"
    _write(out_dir / "index.html", _page("Bugfix catalog", home, 0), manifest, out_dir)
    for collection in COLLECTIONS:
        elements = _sorted_elements(db, collection)
        listing = _links_list([(collection, e.id) for e in elements], 0)
        _write(out_dir / f"{collection}.html", _page(collection, listing, 0), manifest, out_dir)
        for element in elements:
            body = _element_body(db, linker, collection, element)
            _write(out_dir / collection / f"{_lower(element.id)}.html",
                   _page(_lower(element.id), body, 1), manifest, out_dir)
    return manifest
