"""Reader and writer for Bugfix specification text.

A document is a sequence of elements, each opened by one of the keywords
``bug``, ``fix``, ``application``, ``example``, ``construct`` or
``language`` and closed by a line holding only ``end``.  Inside an element,
clause keywords sit at the start of a line; clause content follows on the
same line or on the lines below.  ``--`` starts a comment everywhere except
inside a ``hunk`` clause, whose raw diff text runs up to an ``end`` line at
column 0.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Union

from .errors import SpecSyntaxError
from .lexer import CAPTURE, IDENT, INT, STRING, Source, TokenStream, escape
from .model import ConstructDef, FeatureDef, Multiplicity, Span, canon

WILDCARD = "_"
BUG_CAPTURE = "@bug"


# -- patterns -----------------------------------------------------------------

@dataclass(frozen=True)
class PatternChild:
    pattern: "Pattern"
    field: Optional[str] = None
    quantifier: Multiplicity = Multiplicity.REQUIRED
    capture: Optional[str] = None


@dataclass(frozen=True)
class Pattern:
    name: str
    children: tuple[PatternChild, ...] = ()
    capture: Optional[str] = None

    @property
    def is_wildcard(self) -> bool:
        return self.name == WILDCARD


def captures(pattern: Pattern) -> list[str]:
    """Capture names in in-order traversal, ``@bug`` first, without repeats."""
    names = [BUG_CAPTURE]

    def visit(p: Pattern, own: Optional[str]):
        if own and own not in names:
            names.append(own)
        for child in p.children:
            visit(child.pattern, child.pattern.capture)
            if child.capture and child.capture not in names:
                names.append(child.capture)

    visit(pattern, pattern.capture)
    return names


# -- templates ----------------------------------------------------------------

@dataclass(frozen=True)
class CaptureRef:
    name: str


@dataclass(frozen=True)
class ParamRef:
    name: str


@dataclass(frozen=True)
class StringLeaf:
    text: str


@dataclass(frozen=True)
class SpliceRef:
    """Bare ``*@name`` child: inserts the children of the bound node(s)."""

    name: str


@dataclass(frozen=True)
class ConstructTemplate:
    name: str
    children: tuple[tuple[Optional[str], "Template"], ...] = ()
    splice_base: Optional[str] = None


Template = Union[ConstructTemplate, CaptureRef, ParamRef, StringLeaf, SpliceRef]


def template_refs(template: Template) -> Iterator[Template]:
    """Every CaptureRef, ParamRef and SpliceRef in the template, in order.

    A splice base is reported as a CaptureRef of the same name.
    """
    if isinstance(template, ConstructTemplate):
        if template.splice_base:
            yield CaptureRef(template.splice_base)
        for _, child in template.children:
            yield from template_refs(child)
    elif isinstance(template, (CaptureRef, ParamRef, SpliceRef)):
        yield template


def resolve_parameters(template: Template, names) -> Template:
    """Turn ``@name`` references to declared parameters into ParamRefs."""
    declared = {canon(n) for n in names}
    if isinstance(template, CaptureRef) and canon(template.name[1:]) in declared:
        return ParamRef(template.name[1:])
    if isinstance(template, ConstructTemplate):
        return replace(template, children=tuple(
            (label, resolve_parameters(child, names)) for label, child in template.children))
    return template


# -- recorded application trees ------------------------------------------------

@dataclass(frozen=True)
class RecordedTree:
    type_name: str
    span: Span
    field: Optional[str] = None
    capture: Optional[str] = None
    children: tuple["RecordedTree", ...] = ()

    def walk(self) -> Iterator["RecordedTree"]:
        yield self
        for child in self.children:
            yield from child.walk()

    def capture_spans(self) -> dict[str, list[Span]]:
        spans: dict[str, list[Span]] = {}
        for t in self.walk():
            if t.capture:
                spans.setdefault(t.capture, []).append(t.span)
        return spans


# -- elements -----------------------------------------------------------------

@dataclass(frozen=True)
class Parameter:
    name: str
    type_name: str


@dataclass(frozen=True)
class FixSpec:
    id: str
    bug_id: str
    then: Template
    parameters: tuple[Parameter, ...] = ()
    comment: str = ""
    then_raw: str = field(default="", compare=False)
    inline: bool = field(default=False, compare=False)

    element_kind = "fix"


@dataclass(frozen=True)
class ApplicationSpec:
    id: str
    fix_id: str
    example_id: Optional[str] = None
    tree: Optional[RecordedTree] = None
    parameters: tuple[tuple[str, Template], ...] = ()
    comment: str = ""
    inline: bool = field(default=False, compare=False)

    element_kind = "application"

    @property
    def detached(self) -> bool:
        return self.example_id is None and self.tree is None

    def parameter_map(self) -> dict[str, Template]:
        return dict(self.parameters)


@dataclass(frozen=True)
class BugSpec:
    id: str
    where: Pattern
    parameters: tuple[Parameter, ...] = ()
    fixes: tuple[FixSpec, ...] = ()
    applications: tuple[ApplicationSpec, ...] = ()
    comment: str = ""
    where_raw: str = field(default="", compare=False)

    element_kind = "bug"


@dataclass(frozen=True)
class ExampleSpec:
    id: str
    repository: str
    before: str
    after: str
    language: str
    hunk: str
    comment: str = ""

    element_kind = "example"

    def files(self):
        from .corpus import parse_unified_diff
        return parse_unified_diff(self.hunk)

    @property
    def hunks(self):
        files = self.files()
        return files[0].hunks if files else []


@dataclass(frozen=True)
class LanguageMapping:
    language: str
    construct_name: str
    source: Pattern
    construct: Template
    context: Optional[str] = None
    comment: str = ""
    id: str = field(default="", compare=False)
    source_raw: str = field(default="", compare=False)
    construct_raw: str = field(default="", compare=False)

    element_kind = "language"


ElementSpec = Union[BugSpec, FixSpec, ApplicationSpec, ExampleSpec, ConstructDef, LanguageMapping]


# -- sexp grammars --------------------------------------------------------------

_QUANTIFIERS = {"*": Multiplicity.STAR, "+": Multiplicity.PLUS, "?": Multiplicity.OPTIONAL}


def _read_pattern_node(stream: TokenStream) -> Pattern:
    stream.expect("PUNCT", "(")
    name = stream.expect(IDENT, what="construct name, kind or _").value
    children = []
    while not stream.at_punct(")"):
        label = None
        if stream.at(IDENT) and stream.at_punct(":", 1):
            label = stream.next().value
            stream.next()
        if not stream.at_punct("("):
            stream.error("expected child pattern")
        child = _read_pattern_node(stream)
        quantifier = Multiplicity.REQUIRED
        tok = stream.peek()
        if tok.type == "PUNCT" and tok.value in _QUANTIFIERS:
            quantifier = _QUANTIFIERS[stream.next().value]
        capture = stream.next().value if stream.at(CAPTURE) else None
        children.append(PatternChild(child, label, quantifier, capture))
    stream.expect("PUNCT", ")")
    return Pattern(name, tuple(children))


def _read_pattern(stream: TokenStream) -> Pattern:
    pattern = _read_pattern_node(stream)
    if stream.at(CAPTURE):
        pattern = replace(pattern, capture=stream.next().value)
    return pattern


def _finish(stream: TokenStream, strict: bool):
    if not strict:
        # Surplus closing parentheses after a complete sexp are tolerated.
        while stream.at_punct(")"):
            stream.next()
    if not stream.at_end():
        stream.error("unexpected text after expression")


def parse_pattern(text: str, strict: bool = True) -> Pattern:
    stream = TokenStream(Source.plain(text))
    pattern = _read_pattern(stream)
    _finish(stream, strict)
    return pattern


def _read_template(stream: TokenStream) -> Template:
    if stream.at(CAPTURE):
        return CaptureRef(stream.next().value)
    if stream.at(STRING):
        return StringLeaf(stream.next().value)
    if stream.at_punct("*") and stream.at(CAPTURE, ahead=1):
        stream.next()
        return SpliceRef(stream.next().value)
    if not stream.at_punct("("):
        stream.error("expected template, capture, splice or string")
    stream.next()
    name = stream.expect(IDENT, what="construct name").value
    splice_base = None
    if stream.at_punct("*") and stream.at(CAPTURE, ahead=1):
        stream.next()
        splice_base = stream.next().value
    children = []
    while not stream.at_punct(")"):
        label = None
        if stream.at(IDENT) and stream.at_punct(":", 1):
            label = stream.next().value
            stream.next()
        tok = stream.peek()
        child = _read_template(stream)
        if isinstance(child, StringLeaf) and (label or children):
            stream.error("a string leaf must be the only, unlabeled child", tok)
        if children and isinstance(children[0][1], StringLeaf):
            stream.error("a string leaf must be the only, unlabeled child", tok)
        children.append((label, child))
    stream.expect("PUNCT", ")")
    return ConstructTemplate(name, tuple(children), splice_base)


def parse_template(text: str, strict: bool = True) -> Template:
    stream = TokenStream(Source.plain(text))
    template = _read_template(stream)
    _finish(stream, strict)
    return template


def _read_bindings(stream: TokenStream) -> list[tuple[str, Template]]:
    bindings = []
    seen = set()
    while not stream.at_end():
        tok = stream.expect(CAPTURE, what="@name")
        if canon(tok.value) in seen:
            stream.error(f"parameter {tok.value} bound twice", tok)
        seen.add(canon(tok.value))
        stream.expect("PUNCT", "=")
        bindings.append((tok.value[1:], _read_template(stream)))
    return bindings


def parse_bindings(text: str) -> list[tuple[str, Template]]:
    """Parse ``@name = (sexp)`` lines, as in an application parameter clause."""
    return _read_bindings(TokenStream(Source.plain(text)))


# -- recorded tree clause --------------------------------------------------------

_TREE_LINE = re.compile(
    r"""^(?P<indent>\ *)
    (?:(?P<field>[A-Za-z_]\w*)\s*:\s*)?
    (?P<type>[A-Za-z_]\w*)\s*
    \[\s*(?P<r1>\d+)\s*,\s*(?P<c1>\d+)\s*\]\s*-\s*
    \[\s*(?P<r2>\d+)\s*,\s*(?P<c2>\d+)\s*\]
    (?:\s*(?P<capture>@[A-Za-z_]\w*))?\s*$""",
    re.VERBOSE,
)


def _read_recorded_tree(pieces: list[tuple[int, int, str]]) -> RecordedTree:
    rows = [(line, col, text) for line, col, text in pieces if text.strip()]
    if not rows:
        line, col, _ = pieces[0] if pieces else (1, 1, "")
        raise SpecSyntaxError("empty tree", line, col)
    base = None
    # stack entries: [depth, type, span, field, capture, children]
    stack: list[list] = []
    root = None

    def close_to(depth: int):
        nonlocal root
        while stack and stack[-1][0] >= depth:
            d, t, span, fld, cap, kids, pos = stack.pop()
            built = RecordedTree(t, span, fld, cap, tuple(kids))
            if stack:
                parent = stack[-1]
                if not parent[2].contains(span):
                    raise SpecSyntaxError(
                        f"span {span} of {t} is not inside its parent span {parent[2]}", *pos)
                parent[5].append(built)
            else:
                root = built

    for line, col, text in rows:
        if "\t" in text:
            raise SpecSyntaxError("tabs are not allowed in tree clauses", line, col + text.index("\t"))
        m = _TREE_LINE.match(text)
        if m is None:
            raise SpecSyntaxError("malformed tree line (expected 'type [r, c] - [r, c]')",
                                  line, col + len(text) - len(text.lstrip()))
        indent = len(m.group("indent"))
        if base is None:
            base = indent
        offset = indent - base
        if offset < 0 or offset % 2:
            raise SpecSyntaxError("inconsistent indentation", line, col + indent)
        depth = offset // 2
        if stack and depth > stack[-1][0] + 1 or not stack and root is None and depth != 0:
            raise SpecSyntaxError("indentation skips a level", line, col + indent)
        if depth == 0 and (root is not None or stack):
            if stack:
                close_to(0)
            raise SpecSyntaxError("a tree clause holds exactly one root", line, col + indent)
        try:
            span = Span.of(*(int(m.group(k)) for k in ("r1", "c1", "r2", "c2")))
        except ValueError as exc:
            raise SpecSyntaxError(str(exc), line, col + indent) from None
        close_to(depth)
        stack.append([depth, m.group("type"), span, m.group("field"), m.group("capture"), [],
                      (line, col + indent)])
    close_to(0)
    return root


def parse_recorded_tree(text: str) -> RecordedTree:
    return _read_recorded_tree([(i + 1, 1, line) for i, line in enumerate(text.split("\n"))])


# -- document reader ---------------------------------------------------------------

ELEMENT_KEYWORDS = ("bug", "fix", "application", "example", "construct", "language")

CLAUSE_KEYWORDS = {
    "bug": {"where", "parameter", "fix", "application", "then", "example", "tree"},
    "fix": {"bug_id", "parameter", "then"},
    "application": {"example", "fix", "tree", "parameter"},
    "example": {"repository", "before", "after", "language", "hunk"},
    "construct": {"kind", "feature"},
    "language": {"construct_name", "source", "construct"},
}

# A keyword must not be followed by ':' (that would be a feature or label).
_WORD = re.compile(r"[A-Za-z_]\w*(?![\w]*\s*[*+?]?\s*:)")


def strip_comment(line: str) -> str:
    in_string = False
    i = 0
    while i < len(line):
        ch = line[i]
        if in_string:
            if ch == "\\":
                i += 1
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif line.startswith("--", i):
            return line[:i]
        i += 1
    return line


def _paren_delta(code: str) -> int:
    depth = 0
    in_string = False
    i = 0
    while i < len(code):
        ch = code[i]
        if in_string:
            if ch == "\\":
                i += 1
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        i += 1
    return depth


@dataclass
class _Clause:
    name: str
    line: int
    col: int
    pieces: list = field(default_factory=list)
    raw: list = field(default_factory=list)

    def source(self) -> Source:
        return Source(self.pieces)

    def stream(self) -> TokenStream:
        return TokenStream(self.source())

    def has_content(self) -> bool:
        return any(text.strip() for _, _, text in self.pieces) or bool(self.raw)


class _DocumentReader:
    def __init__(self, text: str, strict: bool):
        self.lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")
        self.strict = strict
        self.mapping_ids: dict[str, int] = {}

    def read(self, recover: bool) -> tuple[list, list[SpecSyntaxError]]:
        elements, errors = [], []
        i = 0
        while i < len(self.lines):
            code = strip_comment(self.lines[i])
            if not code.strip():
                i += 1
                continue
            try:
                produced, i = self._element(i)
                elements.extend(produced)
            except SpecSyntaxError as err:
                if not recover:
                    raise
                errors.append(err)
                i = self._skip_past_end(i)
        return elements, errors

    def _skip_past_end(self, i: int) -> int:
        word = strip_comment(self.lines[i]).split()
        if not word or word[0] not in ELEMENT_KEYWORDS:
            return i + 1
        for j in range(i + 1, len(self.lines)):
            if strip_comment(self.lines[j]).strip() == "end":
                return j + 1
        return len(self.lines)

    def _element(self, start: int):
        code = strip_comment(self.lines[start])
        lead = len(code) - len(code.lstrip())
        m = re.match(r"[A-Za-z_]\w*", code[lead:])
        if m is None or m.group() not in ELEMENT_KEYWORDS:
            word = m.group() if m else code.strip()[:1]
            raise SpecSyntaxError(f"unknown keyword {word!r}, expected one of "
                                  + ", ".join(ELEMENT_KEYWORDS), start + 1, lead + 1)
        kind = m.group()
        keywords = CLAUSE_KEYWORDS[kind]
        rest_col = lead + m.end()
        header = _Clause(kind, start + 1, lead + 1)
        if code[rest_col:].strip():
            header.pieces.append((start + 1, rest_col + 1, code[rest_col:]))
        clauses: list[_Clause] = [header]
        comment: list[str] = []
        current = header
        depth = 0
        i = start + 1
        while i < len(self.lines):
            raw = self.lines[i]
            if current.name == "hunk":
                if raw.rstrip() == "end":
                    return self._build(kind, clauses, comment), i + 1
                current.raw.append(raw)
                i += 1
                continue
            code = strip_comment(raw).rstrip()
            stripped = code.strip()
            if stripped == "end":
                return self._build(kind, clauses, comment), i + 1
            if not stripped:
                before_content = current is header and kind != "language" or not current.has_content()
                if raw.strip().startswith("--") and before_content:
                    comment.append(raw.strip()[2:].strip())
                i += 1
                continue
            lead = len(code) - len(code.lstrip())
            m = _WORD.match(code, lead)
            word = m.group() if m else None
            is_tree_line = current.name == "tree" and _TREE_LINE.match(code)
            if depth == 0 and word in keywords and not is_tree_line:
                current = _Clause(word, i + 1, lead + 1)
                rest = code[m.end():]
                if rest.strip():
                    current.pieces.append((i + 1, m.end() + 1, rest))
                clauses.append(current)
            else:
                current.pieces.append((i + 1, 1, code))
            depth = max(0, depth + _paren_delta(code))
            i += 1
        raise SpecSyntaxError(f"unterminated {kind} element (missing 'end')", start + 1, 1)

    # -- clause content helpers

    def _ident(self, clause: _Clause) -> str:
        stream = clause.stream()
        if stream.at_end():
            raise SpecSyntaxError(f"{clause.name} clause needs an identifier", clause.line, clause.col)
        tok = stream.expect(IDENT, what="identifier")
        if not stream.at_end():
            stream.error(f"{clause.name} clause takes a single identifier")
        return tok.value

    def _word(self, clause: _Clause) -> str:
        words = " ".join(text for _, _, text in clause.pieces).split()
        if len(words) != 1:
            raise SpecSyntaxError(f"{clause.name} clause takes a single value", clause.line, clause.col)
        return words[0]

    def _pattern(self, clause: _Clause) -> tuple[Pattern, str]:
        stream = clause.stream()
        if stream.at_end():
            raise SpecSyntaxError(f"empty {clause.name} clause", clause.line, clause.col)
        begin = stream.peek().offset
        pattern = _read_pattern(stream)
        raw = stream.source.slice(begin, stream.last_end())
        _finish(stream, self.strict)
        return pattern, raw

    def _template(self, clause: _Clause, stream: Optional[TokenStream] = None) -> tuple[Template, str]:
        stream = stream or clause.stream()
        if stream.at_end():
            raise SpecSyntaxError(f"empty {clause.name} clause", clause.line, clause.col)
        begin = stream.peek().offset
        template = _read_template(stream)
        raw = stream.source.slice(begin, stream.last_end())
        _finish(stream, self.strict)
        return template, raw

    def _declarations(self, clause: _Clause) -> list[Parameter]:
        stream = clause.stream()
        params, seen = [], set()
        while not stream.at_end():
            tok = stream.next()
            if tok.type not in (IDENT, CAPTURE):
                stream.error("expected parameter name", tok)
            name = tok.value.lstrip("@")
            if canon(name) in seen:
                stream.error(f"parameter {name} declared twice", tok)
            seen.add(canon(name))
            stream.expect("PUNCT", ":")
            params.append(Parameter(name, stream.expect(IDENT, what="type name").value))
        return params

    def _features(self, clause: _Clause) -> list[FeatureDef]:
        stream = clause.stream()
        features = []
        while not stream.at_end():
            name = stream.expect(IDENT, what="feature name").value
            multiplicity = Multiplicity.REQUIRED
            tok = stream.peek()
            if tok.type == "PUNCT" and tok.value in _QUANTIFIERS:
                multiplicity = _QUANTIFIERS[stream.next().value]
            stream.expect("PUNCT", ":")
            features.append(FeatureDef(name, stream.expect(IDENT, what="type name").value, multiplicity))
        return features

    def _kinds(self, clause: _Clause) -> list[str]:
        stream = clause.stream()
        kinds = []
        while not stream.at_end():
            kinds.append(stream.expect(IDENT, what="kind name").value)
            stream.accept_punct(",")
        return kinds

    def _bindings(self, clause: _Clause, stream: Optional[TokenStream] = None) -> list[tuple[str, Template]]:
        return _read_bindings(stream or clause.stream())

    @staticmethod
    def _single(clauses: list[_Clause], allowed: set[str]) -> dict[str, _Clause]:
        table: dict[str, _Clause] = {}
        for c in clauses:
            if c.name not in allowed:
                raise SpecSyntaxError(f"clause {c.name!r} is not allowed here", c.line, c.col)
            if c.name in table:
                raise SpecSyntaxError(f"duplicate {c.name} clause", c.line, c.col)
            table[c.name] = c
        return table

    @staticmethod
    def _require(table: dict[str, _Clause], names, header: _Clause):
        for name in names:
            if name not in table:
                raise SpecSyntaxError(f"{header.name} element is missing its {name} clause",
                                      header.line, header.col)

    # -- element builders

    def _build(self, kind: str, clauses: list[_Clause], comment: list[str]) -> list:
        text = "\n".join(comment)
        header, body = clauses[0], clauses[1:]
        if kind == "language":
            return [self._language(header, body, text)]
        ident = self._ident(header)
        return getattr(self, "_" + kind)(ident, header, body, text)

    def _fix(self, ident, header, body, comment):
        table = self._single(body, CLAUSE_KEYWORDS["fix"])
        self._require(table, ("bug_id", "then"), header)
        params = self._declarations(table["parameter"]) if "parameter" in table else []
        then, raw = self._template(table["then"])
        return [FixSpec(ident, self._ident(table["bug_id"]),
                        resolve_parameters(then, [p.name for p in params]),
                        tuple(params), comment, raw)]

    def _application(self, ident, header, body, comment):
        table = self._single(body, CLAUSE_KEYWORDS["application"])
        self._require(table, ("fix",), header)
        if ("example" in table) != ("tree" in table):
            self._require(table, ("example", "tree"), header)
        bindings = self._bindings(table["parameter"]) if "parameter" in table else []
        example = self._ident(table["example"]) if "example" in table else None
        tree = _read_recorded_tree(table["tree"].pieces) if "tree" in table else None
        return [ApplicationSpec(ident, self._ident(table["fix"]), example, tree, tuple(bindings), comment)]

    def _example(self, ident, header, body, comment):
        table = self._single(body, CLAUSE_KEYWORDS["example"])
        self._require(table, ("repository", "before", "after", "language", "hunk"), header)
        hunk = table["hunk"]
        if hunk.pieces:
            raise SpecSyntaxError("hunk text starts on the line after the keyword", hunk.line, hunk.col)
        return [ExampleSpec(ident, self._word(table["repository"]), self._word(table["before"]),
                            self._word(table["after"]), self._ident(table["language"]),
                            "\n".join(hunk.raw), comment)]

    def _construct(self, ident, header, body, comment):
        table = self._single(body, CLAUSE_KEYWORDS["construct"])
        kinds = self._kinds(table["kind"]) if "kind" in table else []
        features = self._features(table["feature"]) if "feature" in table else []
        return [ConstructDef(ident, tuple(kinds), tuple(features), comment)]

    def _language(self, header, body, comment):
        table = self._single(body, CLAUSE_KEYWORDS["language"])
        self._require(table, ("construct_name", "source", "construct"), header)
        language = self._ident(header)
        construct_name = self._ident(table["construct_name"])
        stream = table["source"].stream()
        context = None
        if stream.at(IDENT) and stream.at_punct(":", 1):
            context = stream.next().value
            stream.next()
        if stream.at_end():
            c = table["source"]
            raise SpecSyntaxError("empty source clause", c.line, c.col)
        begin = stream.peek().offset
        source = _read_pattern(stream)
        source_raw = stream.source.slice(begin, stream.last_end())
        _finish(stream, self.strict)
        construct, construct_raw = self._template(table["construct"])
        base = f"{canon(language)}_{canon(construct_name)}"
        count = self.mapping_ids[base] = self.mapping_ids.get(base, 0) + 1
        ident = base if count == 1 else f"{base}_{count}"
        return LanguageMapping(language, construct_name, source, construct, context, comment,
                               ident, source_raw, construct_raw)

    def _bug(self, ident, header, body, comment):
        params: Optional[list[Parameter]] = None
        where = None
        fixes: list[dict] = []
        apps: list[dict] = []
        block: Optional[dict] = None

        def once(target: dict, key: str, clause: _Clause, value):
            if key in target:
                raise SpecSyntaxError(f"duplicate {clause.name} clause", clause.line, clause.col)
            target[key] = value

        top: dict = {}
        for c in body:
            if c.name == "where":
                block = None
                once(top, "where", c, self._pattern(c))
            elif c.name == "fix":
                block = {"kind": "fix", "id": self._ident(c), "clause": c}
                fixes.append(block)
            elif c.name == "application":
                stream = c.stream()
                name = None
                if stream.at(IDENT):
                    name = stream.next().value
                block = {"kind": "app", "id": name, "clause": c,
                         "fix": fixes[-1]["id"] if fixes else None,
                         "bindings": self._bindings(c, stream)}
                apps.append(block)
            elif c.name == "parameter":
                if block is None:
                    once(top, "parameter", c, self._declarations(c))
                elif block["kind"] == "fix":
                    once(block, "parameter", c, self._declarations(c))
                else:
                    once(block, "parameter", c, None)
                    block["bindings"] += self._bindings(c)
            elif c.name == "then":
                if block is None or block["kind"] != "fix":
                    raise SpecSyntaxError("then clause outside a fix clause", c.line, c.col)
                once(block, "then", c, self._template(c))
            elif c.name in ("example", "tree"):
                if block is None or block["kind"] != "app":
                    raise SpecSyntaxError(f"{c.name} clause outside an application clause", c.line, c.col)
                value = self._ident(c) if c.name == "example" else _read_recorded_tree(c.pieces)
                once(block, c.name, c, value)
        if "where" not in top:
            self._require(top, ("where",), header)
        where, where_raw = top["where"]
        params = top.get("parameter", [])

        fix_specs = []
        for f in fixes:
            if "then" not in f:
                c = f["clause"]
                raise SpecSyntaxError(f"fix {f['id']} has no then clause", c.line, c.col)
            own = f.get("parameter", [])
            all_params = tuple(params) + tuple(p for p in own
                                               if canon(p.name) not in {canon(q.name) for q in params})
            then, raw = f["then"]
            fix_specs.append(FixSpec(f["id"], ident, resolve_parameters(then, [p.name for p in all_params]),
                                     all_params, "", raw, inline=True))
        app_specs = []
        counters: dict[str, int] = {}
        for a in apps:
            fix_id = a["fix"] or (fixes[0]["id"] if fixes else None)
            if fix_id is None:
                c = a["clause"]
                raise SpecSyntaxError("application clause in a bug without fix clauses", c.line, c.col)
            counters[fix_id] = counters.get(fix_id, 0) + 1
            app_id = a["id"] or f"{fix_id}_APPLICATION_{counters[fix_id]}"
            app_specs.append(ApplicationSpec(app_id, fix_id, a.get("example"), a.get("tree"),
                                             tuple(a["bindings"]), "", inline=True))
        bug = BugSpec(ident, where, tuple(params), tuple(fix_specs), tuple(app_specs), comment, where_raw)
        return [bug, *fix_specs, *app_specs]


def parse_document(text: str, strict: bool = False) -> list:
    """Parse every element in ``text``; raise SpecSyntaxError on the first error.

    With ``strict=False`` (the default) surplus closing parentheses after a
    complete pattern or template are ignored.
    """
    elements, _ = _DocumentReader(text, strict).read(recover=False)
    return elements


def parse_document_recovering(text: str, strict: bool = False):
    """Like parse_document, but report the first error of each broken element
    and keep going. Returns ``(elements, errors)``."""
    return _DocumentReader(text, strict).read(recover=True)


# -- writer -----------------------------------------------------------------------

def format_pattern(pattern: Pattern, indent: int = 0) -> str:
    if pattern.children:
        pad = " " * (indent + 2)
        lines = [f"({pattern.name}"]
        for child in pattern.children:
            lines.append(pad + _format_pattern_child(child, indent + 2))
        text = "\n".join(lines) + ")"
    else:
        text = f"({pattern.name})"
    if pattern.capture:
        text += " " + pattern.capture
    return text


def _format_pattern_child(child: PatternChild, indent: int) -> str:
    text = f"{child.field}: " if child.field else ""
    text += format_pattern(child.pattern, indent) + child.quantifier.symbol
    if child.capture:
        text += " " + child.capture
    return text


def format_template(template: Template, indent: int = 0) -> str:
    if isinstance(template, CaptureRef):
        return template.name
    if isinstance(template, ParamRef):
        return "@" + template.name
    if isinstance(template, StringLeaf):
        return escape(template.text)
    if isinstance(template, SpliceRef):
        return "*" + template.name
    head = f"({template.name}"
    if template.splice_base:
        head += f" *{template.splice_base}"
    if not template.children:
        return head + ")"
    if len(template.children) == 1 and isinstance(template.children[0][1], StringLeaf):
        return f"{head} {escape(template.children[0][1].text)})"
    pad = " " * (indent + 2)
    lines = [head]
    for label, child in template.children:
        prefix = f"{label}: " if label else ""
        lines.append(pad + prefix + format_template(child, indent + 2))
    return "\n".join(lines) + ")"


def format_recorded_tree(tree: RecordedTree, indent: int = 0) -> str:
    lines = []

    def visit(t: RecordedTree, depth: int):
        text = " " * (indent + 2 * depth)
        if t.field:
            text += f"{t.field}: "
        text += f"{t.type_name} {t.span}"
        if t.capture:
            text += " " + t.capture
        lines.append(text)
        for child in t.children:
            visit(child, depth + 1)

    visit(tree, 0)
    return "\n".join(lines)


def _indented(text: str, indent: int = 2) -> str:
    pad = " " * indent
    return "\n".join(pad + line for line in text.split("\n"))


def _comment_lines(comment: str) -> list[str]:
    if not comment:
        return []
    return [("    -- " + line).rstrip() for line in comment.split("\n")]


def _parameter_lines(params) -> list[str]:
    if not params:
        return []
    return ["parameter"] + [f"  {p.name}: {p.type_name}" for p in params]


def _binding_lines(bindings) -> list[str]:
    return [_indented(f"@{name} = " + format_template(value)) for name, value in bindings]


def serialize(element) -> str:
    """Canonical text for one element; parse_document reads it back equal."""
    lines: list[str]
    if isinstance(element, BugSpec):
        lines = [f"bug {element.id}", *_comment_lines(element.comment)]
        lines += _parameter_lines(element.parameters)
        lines += ["where", _indented(format_pattern(element.where))]
        inherited = {canon(p.name) for p in element.parameters}
        placed = set()
        for fix in element.fixes:
            lines.append(f"fix {fix.id}")
            lines += _parameter_lines([p for p in fix.parameters if canon(p.name) not in inherited])
            lines += ["then", _indented(format_template(fix.then))]
            for app in element.applications:
                if app.fix_id == fix.id:
                    placed.add(app.id)
                    lines += _inline_application(app)
        for app in element.applications:
            if app.id not in placed:
                lines += _inline_application(app)
    elif isinstance(element, FixSpec):
        lines = [f"fix {element.id}", *_comment_lines(element.comment),
                 "bug_id", f"  {element.bug_id}"]
        lines += _parameter_lines(element.parameters)
        lines += ["then", _indented(format_template(element.then))]
    elif isinstance(element, ApplicationSpec):
        lines = [f"application {element.id}", *_comment_lines(element.comment)]
        if element.example_id is not None:
            lines += ["example", f"  {element.example_id}"]
        lines += ["fix", f"  {element.fix_id}"]
        if element.tree is not None:
            lines += ["tree", format_recorded_tree(element.tree, 2)]
        if element.parameters:
            lines += ["parameter", *_binding_lines(element.parameters)]
    elif isinstance(element, ExampleSpec):
        lines = [f"example {element.id}", *_comment_lines(element.comment),
                 "repository", f"  {element.repository}", "before", f"  {element.before}",
                 "after", f"  {element.after}", "language", f"  {element.language}",
                 "hunk", element.hunk]
    elif isinstance(element, ConstructDef):
        lines = [f"construct {element.id}", *_comment_lines(element.comment)]
        if element.kinds:
            lines += ["kind", *(f"  {k}" for k in element.kinds)]
        if element.features:
            lines += ["feature", *(f"  {f.name}{f.multiplicity.symbol}: {f.type_name}"
                                   for f in element.features)]
    elif isinstance(element, LanguageMapping):
        lines = ["language", *_comment_lines(element.comment), f"  {element.language}",
                 "construct_name", f"  {element.construct_name}", "source"]
        if element.context:
            lines += [f"  {element.context}:", _indented(format_pattern(element.source), 4)]
        else:
            lines.append(_indented(format_pattern(element.source)))
        lines += ["construct", _indented(format_template(element.construct))]
    else:
        raise TypeError(f"not a Bugfix element: {element!r}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def _inline_application(app: ApplicationSpec) -> list[str]:
    lines = [f"application {app.id}", *_binding_lines(app.parameters)]
    if app.example_id is not None:
        lines += ["example", f"  {app.example_id}"]
    if app.tree is not None:
        lines += ["tree", format_recorded_tree(app.tree, 2)]
    return lines


def serialize_document(elements) -> str:
    """Serialize a parsed document, skipping elements exposed from inside a bug."""
    return "\n".join(serialize(e) for e in elements if not getattr(e, "inline", False))
