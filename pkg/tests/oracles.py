"""Independent reference implementations and random generators for tests.

The matcher oracle enumerates every way of splitting a node's children
among the pattern children (itertools over run lengths) and keeps the
splits whose runs all match.  It shares no code with bugfix.matcher.
"""

from __future__ import annotations

import itertools
import random

from bugfix.model import FeatureDef, ConstructDef, Multiplicity, UNode
from bugfix.specparse import Pattern, PatternChild

NAMES = ("a", "b", "c")
LABELS = (None, None, "x", "y")


def _name_ok(pattern, node, kinds) -> bool:
    if pattern.name == "_":
        return True
    if pattern.name.upper() == node.construct_name.upper():
        return True
    return pattern.name.upper() in kinds.get(node.construct_name.upper(), ())


def _allowed(q: Multiplicity, n: int) -> bool:
    return {
        Multiplicity.REQUIRED: n == 1,
        Multiplicity.OPTIONAL: n <= 1,
        Multiplicity.STAR: True,
        Multiplicity.PLUS: n >= 1,
    }[q]


def _splits(count: int, parts: int):
    """Every tuple of ``parts`` non-negative run lengths summing to ``count``."""
    for combo in itertools.product(range(count + 1), repeat=parts):
        if sum(combo) == count:
            yield combo


def _merge_all(assignments):
    out: dict = {}
    for a in assignments:
        for name, paths in a.items():
            out[name] = out.get(name, ()) + paths
    return out


def oracle_node(pattern: Pattern, node: UNode, kinds) -> list[dict]:
    """All partial assignments (capture -> relative paths) for pattern at node."""
    if not _name_ok(pattern, node, kinds):
        return []
    if not pattern.children:
        return [{}]
    results = []
    kids = node.children
    for lengths in _splits(len(kids), len(pattern.children)):
        if not all(_allowed(pc.quantifier, n) for pc, n in zip(pattern.children, lengths)):
            continue
        per_child_options = []
        start = 0
        ok = True
        for pc, n in zip(pattern.children, lengths):
            run = list(range(start, start + n))
            start += n
            if any(pc.field is not None and (kids[i][0] or "").upper() != pc.field.upper() for i in run):
                ok = False
                break
            inner_options = []
            for i in run:
                opts = [{k: tuple((i,) + p for p in v) for k, v in a.items()}
                        for a in oracle_node(pc.pattern, kids[i][1], kinds)]
                if not opts:
                    ok = False
                    break
                inner_options.append(opts)
            if not ok:
                break
            own = {pc.capture: tuple((i,) for i in run)} if pc.capture else {}
            per_child_options.append([_merge_all((own, *combo)) for combo in itertools.product(*inner_options)])
        if not ok:
            continue
        for combo in itertools.product(*per_child_options):
            results.append(_merge_all(combo))
    return results


def all_captures(pattern: Pattern) -> list[str]:
    names = []

    def visit(p):
        if p.capture and p.capture not in names:
            names.append(p.capture)
        for c in p.children:
            visit(c.pattern)
            if c.capture and c.capture not in names:
                names.append(c.capture)

    visit(pattern)
    return names


def oracle_match_set(pattern: Pattern, node: UNode, kinds=None) -> set:
    """Set of full assignments, in the same shape as MatchResult.assignment()."""
    kinds = kinds or {}
    out = set()
    for a in oracle_node(pattern, node, kinds):
        full = {name: () for name in all_captures(pattern)}
        full.update(a)
        full["@bug"] = ((),)
        if pattern.capture:
            full[pattern.capture] = ((),) + a.get(pattern.capture, ())
        out.add(tuple(sorted(full.items())))
    return out


def assignment_key(match) -> tuple:
    return tuple(sorted(match.assignment().items()))


# -- random generators -----------------------------------------------------------

def random_tree(rng: random.Random, depth: int = 4, fanout: int = 5) -> UNode:
    name = rng.choice(NAMES)
    if depth <= 1 or rng.random() < 0.3:
        return UNode(name, (), rng.choice(("p", "q", None)))
    kids = tuple((rng.choice(LABELS), random_tree(rng, depth - 1, fanout))
                 for _ in range(rng.randint(0, fanout)))
    return UNode(name, kids)


class _Names:
    def __init__(self):
        self.n = 0

    def fresh(self) -> str:
        self.n += 1
        return f"@c{self.n}"


def random_pattern(rng: random.Random, depth: int = 3, max_quantified: int = 3) -> Pattern:
    names = _Names()
    budget = [max_quantified]

    def build(d: int) -> Pattern:
        name = rng.choice(NAMES + ("_", "_"))
        children = []
        if d > 1 and rng.random() < 0.75:
            for _ in range(rng.randint(1, 4)):
                q = Multiplicity.REQUIRED
                if budget[0] > 0 and rng.random() < 0.5:
                    q = rng.choice((Multiplicity.STAR, Multiplicity.PLUS, Multiplicity.OPTIONAL))
                    budget[0] -= 1
                field = rng.choice((None, None, None, "x", "y"))
                capture = names.fresh() if rng.random() < 0.5 else None
                children.append(PatternChild(build(d - 1), field, q, capture))
        return Pattern(name, tuple(children))

    root = build(depth)
    if rng.random() < 0.2:
        root = Pattern(root.name, root.children, names.fresh())
    return root


def random_registry_constructs(rng: random.Random) -> list[ConstructDef]:
    """Constructs over NAMES with random kinds K1/K2 and well-typed features."""
    out = []
    for name in NAMES:
        kinds = tuple(k for k in ("K1", "K2") if rng.random() < 0.5)
        feats = tuple(FeatureDef(f"f{i}", rng.choice(NAMES + kinds if kinds else NAMES),
                                 rng.choice(list(Multiplicity)))
                      for i in range(rng.randint(0, 2)))
        out.append(ConstructDef(name.upper(), kinds, feats))
    return out


def brute_split_count(n: int) -> int:
    """Matches of ((_)* @a (_) @x (_)* @b) over n children: every (|a|, |b|)
    with |a| + 1 + |b| = n."""
    return sum(1 for a in range(n + 1) for b in range(n + 1) if a + 1 + b == n)


def pattern_from_tree(rng: random.Random, tree: UNode, max_quantified: int = 3) -> Pattern:
    """A pattern that matches ``tree`` at its root, by abstracting it: names
    may become wildcards and runs of children collapse into ``(_)*``/``(_)+``."""
    names = _Names()
    budget = [max_quantified]

    def build(node: UNode, depth: int) -> Pattern:
        name = "_" if rng.random() < 0.3 else node.construct_name
        if depth <= 1 or not node.children or rng.random() < 0.2:
            return Pattern(name)
        children = []
        i = 0
        kids = node.children
        while i < len(kids):
            if budget[0] > 0 and rng.random() < 0.35:
                run = rng.randint(0, len(kids) - i)
                q = Multiplicity.STAR if run == 0 or rng.random() < 0.5 else Multiplicity.PLUS
                if run <= 1 and rng.random() < 0.3:
                    q = Multiplicity.OPTIONAL
                budget[0] -= 1
                children.append(PatternChild(Pattern("_"), None, q,
                                             names.fresh() if rng.random() < 0.6 else None))
                i += run
                continue
            label, kid = kids[i]
            field = label if label is not None and rng.random() < 0.5 else None
            children.append(PatternChild(build(kid, depth - 1), field, Multiplicity.REQUIRED,
                                         names.fresh() if rng.random() < 0.5 else None))
            i += 1
        return Pattern(name, tuple(children))

    return build(tree, 3)
