"""Fix templates: instantiation under capture bindings and parameters."""

from __future__ import annotations

from typing import Mapping, Optional, Union

from .errors import Diagnostic, PathInvalid, RewriteError, SpliceOfNonNode, UnboundCapture, UnboundParameter
from .matcher import MatchResult
from .model import UNode, canon, replace_at
from .specparse import (
    BUG_CAPTURE, BugSpec, CaptureRef, ConstructTemplate, FixSpec, ParamRef, SpliceRef,
    StringLeaf, Template, captures, template_refs,
)

ParamEnv = Mapping[str, UNode]
_Item = tuple[Optional[str], UNode]


def _lookup(name: str, bindings: Optional[MatchResult], params: ParamEnv) -> list[_Item]:
    """Resolve ``@name`` to labeled nodes: captures first, then parameters."""
    if bindings is not None and name in bindings.bindings:
        b = bindings.bindings[name]
        return list(zip(b.labels, b.nodes))
    bare = name[1:] if name.startswith("@") else name
    for key, value in params.items():
        if canon(key.lstrip("@")) == canon(bare):
            return [(None, value)]
    if name.startswith("@"):
        raise UnboundCapture(name)
    raise UnboundParameter(name)


def _param(name: str, params: ParamEnv) -> UNode:
    for key, value in params.items():
        if canon(key.lstrip("@")) == canon(name):
            return value
    raise UnboundParameter(name)


def _items(template: Template, label: Optional[str], bindings, params) -> list[_Item]:
    if isinstance(template, CaptureRef):
        return [(label if label else original, node)
                for original, node in _lookup(template.name, bindings, params)]
    if isinstance(template, ParamRef):
        return [(label, _param(template.name, params))]
    if isinstance(template, SpliceRef):
        out = []
        for _, node in _lookup(template.name, bindings, params):
            out.extend(node.children)
        return out
    if isinstance(template, StringLeaf):
        raise RewriteError("a string leaf needs an enclosing construct")
    return [(label, _construct(template, bindings, params))]


def _construct(template: ConstructTemplate, bindings, params) -> UNode:
    if len(template.children) == 1 and isinstance(template.children[0][1], StringLeaf):
        return UNode(template.name, (), template.children[0][1].text)

    explicit: list[_Item] = []
    for label, child in template.children:
        explicit.extend(_items(child, label, bindings, params))
    if template.splice_base is None:
        return UNode(template.name, tuple(explicit))

    base = _lookup(template.splice_base, bindings, params)
    if len(base) != 1:
        raise SpliceOfNonNode(template.splice_base, len(base))
    base_node = base[0][1]
    if base_node.leaf_text is not None and not explicit:
        return UNode(template.name, (), base_node.leaf_text)

    overrides: dict[str, list[_Item]] = {}
    for item in explicit:
        if item[0] is not None:
            overrides.setdefault(canon(item[0]), []).append(item)
    children: list[_Item] = []
    emitted: set[str] = set()
    for label, child in base_node.children:
        key = canon(label) if label is not None else None
        if key in overrides:
            if key not in emitted:
                children.extend(overrides[key])
                emitted.add(key)
            continue
        children.append((label, child))
    for key, items in overrides.items():
        if key not in emitted:
            children.extend(items)
    children.extend(item for item in explicit if item[0] is None)
    return UNode(template.name, tuple(children))


def instantiate(template: Template, bindings: Optional[MatchResult] = None,
                params: Optional[ParamEnv] = None) -> Union[UNode, list[UNode]]:
    """Build the tree described by ``template``.

    A construct template yields one fresh node. A capture reference yields
    the bound node, or a list when it is bound to zero or several nodes.
    Synthesized nodes carry no spans.
    """
    items = _items(template, None, bindings, params or {})
    if isinstance(template, (ConstructTemplate, ParamRef)):
        return items[0][1]
    if len(items) == 1 and isinstance(template, CaptureRef):
        b = bindings.bindings.get(template.name) if bindings else None
        if b is None or len(b.nodes) == 1:
            return items[0][1]
    return [n for _, n in items]


def instantiate_node(template: Template, bindings: Optional[MatchResult] = None,
                     params: Optional[ParamEnv] = None) -> UNode:
    result = instantiate(template, bindings, params)
    if isinstance(result, list):
        raise RewriteError(f"template produced {len(result)} nodes where exactly one is needed")
    return result


def param_env(values: Mapping[str, Template]) -> dict[str, UNode]:
    """Instantiate ground parameter templates (no captures) into trees."""
    return {name.lstrip("@"): instantiate_node(t) for name, t in values.items()}


def apply_fix(tree: UNode, match: MatchResult, fix: FixSpec, params: Optional[ParamEnv] = None) -> UNode:
    params = params or {}
    supplied = {canon(k.lstrip("@")) for k in params}
    for p in fix.parameters:
        if canon(p.name) not in supplied:
            raise UnboundParameter(p.name)
    replacement = instantiate_node(fix.then, match, params)
    try:
        return replace_at(tree, match.path, replacement)
    except IndexError:
        raise PathInvalid(match.path) from None


def check_fix_captures(fix: FixSpec, bug: BugSpec) -> list[Diagnostic]:
    known = {canon(c) for c in captures(bug.where)} | {canon(BUG_CAPTURE)}
    declared = {canon(p.name) for p in fix.parameters}
    diagnostics, reported = [], set()
    for ref in template_refs(fix.then):
        if isinstance(ref, ParamRef):
            if canon(ref.name) not in declared:
                message = f"parameter {ref.name} is not declared"
            else:
                continue
        elif canon(ref.name) in known or canon(ref.name[1:]) in declared:
            continue
        else:
            message = f"{ref.name} is neither a capture of bug {bug.id} nor a declared parameter"
        key = canon(ref.name)
        if key not in reported:
            reported.add(key)
            diagnostics.append(Diagnostic("UnknownCapture", fix.id, message, ref.name))
    return diagnostics
