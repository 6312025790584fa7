"""Parenthesized tree file format.

One node is ``(name [r,c]-[r,c] child* "leaf")``; the span and the leaf
string are optional, each child may carry a ``label:`` prefix, and ``--``
starts a line comment::

    (argument_list [766, 28] - [766, 66]
      (identifier [766, 29] - [766, 37] "fromNode")
      (field_access
        object: (identifier "Branch")
        field: (identifier "ON_EX")))
"""

from __future__ import annotations

from typing import Optional

from .errors import SpecSyntaxError
from .lexer import IDENT, INT, STRING, Source, TokenStream, escape
from .model import Span, UNode


def parse_tree(text: str) -> UNode:
    stream = TokenStream(Source.plain(text.replace("\r\n", "\n")))
    tree = read_node(stream)
    if not stream.at_end():
        stream.error("expected end of tree file")
    return tree


def read_span(stream: TokenStream) -> Span:
    start_tok = stream.peek()
    nums = []
    for i in range(2):
        if i:
            stream.expect("PUNCT", "-")
        stream.expect("PUNCT", "[")
        nums.append(int(stream.expect(INT, what="row").value))
        stream.expect("PUNCT", ",")
        nums.append(int(stream.expect(INT, what="column").value))
        stream.expect("PUNCT", "]")
    try:
        return Span.of(*nums)
    except ValueError as exc:
        raise SpecSyntaxError(str(exc), *stream.source.position(start_tok.offset)) from None


def read_node(stream: TokenStream) -> UNode:
    stream.expect("PUNCT", "(")
    name = stream.expect(IDENT, what="node name").value
    span = read_span(stream) if stream.at_punct("[") else None
    children: list[tuple[Optional[str], UNode]] = []
    text = None
    while not stream.at_punct(")"):
        if stream.at(STRING):
            tok = stream.next()
            if text is not None or children:
                stream.error("leaf text must be the only content of a node", tok)
            text = tok.value
            continue
        if text is not None:
            stream.error("leaf node cannot have children")
        label = None
        if stream.at(IDENT) and stream.at_punct(":", 1):
            label = stream.next().value
            stream.next()
        if not stream.at_punct("("):
            stream.error("expected child node")
        children.append((label, read_node(stream)))
    stream.expect("PUNCT", ")")
    return UNode(name, tuple(children), text, span)


def _head(node: UNode, spans: bool) -> str:
    head = node.construct_name
    if spans and node.span is not None:
        s = node.span
        head += f" [{s.start.row}, {s.start.col}] - [{s.end.row}, {s.end.col}]"
    if node.leaf_text is not None:
        head += " " + escape(node.leaf_text)
    return head


def format_tree(node: UNode, indent: int = 0, spans: bool = True) -> str:
    """Render a tree; inner nodes put one child per line, two spaces deeper."""
    if not node.children:
        return f"({_head(node, spans)})"
    pad = " " * (indent + 2)
    lines = [f"({_head(node, spans)}"]
    for label, child in node.children:
        prefix = f"{label}: " if label else ""
        lines.append(pad + prefix + format_tree(child, indent + 2, spans))
    return "\n".join(lines) + ")"
