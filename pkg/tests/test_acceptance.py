"""Acceptance criteria, one test each.  Every test records a PASS/FAIL
line that is repeated in the terminal summary."""

import json
import random
import time
from dataclasses import replace

import pytest

from bugfix.cli import run
from bugfix.corpus import after_fragment, apply_hunk, before_fragment, make_hunk, parse_unified_diff, rebase
from bugfix.mapper import LanguageDef, group_languages, translate
from bugfix.matcher import match_at
from bugfix.model import ConstructDef, FeatureDef, Span, leaf, node, structural_equals, validate_registry
from bugfix.rewriter import check_fix_captures
from bugfix.specparse import parse_document, parse_document_recovering, parse_pattern, parse_template, serialize
from bugfix.store import emit_json, load_repository
from bugfix.treefile import parse_tree
from bugfix.verify import Stage, Status, recorded_to_tree, verify_application
from conftest import PUBLISHED, SAMPLE, load_elements
from crawler import dangling
from oracles import assignment_key, oracle_match_set, pattern_from_tree, random_pattern, random_tree

# the published listings; 10_* is a reconstruction backing the JSON sample
PUBLISHED_LISTINGS = sorted(p for p in PUBLISHED.glob("0*.bugfix"))


@pytest.mark.criterion(1)
def test_published_listings_parse_and_roundtrip(acceptance):
    start = time.perf_counter()
    listings = 0
    for path in PUBLISHED_LISTINGS:
        elements, errors = parse_document_recovering(path.read_text())
        assert errors == [], path.name
        for element in elements:
            if getattr(element, "inline", False):
                continue
            listings += 1
            text = serialize(element)
            (again, *_) = parse_document(text)
            assert again == element, path.name
    golden = json.loads((PUBLISHED / "09_wrong_return_statement_1.json").read_text())
    assert golden["where_raw"] == "(return_statement return_value: (true) @wrong_value)"
    parse_pattern(golden["where_raw"])
    listings += 1
    elapsed = time.perf_counter() - start
    assert listings == 11
    assert elapsed < 1.0
    acceptance(f"{listings} listings, {elapsed:.3f}s")


@pytest.mark.criterion(2)
def test_matcher_oracle(acceptance):
    start = time.perf_counter()
    rng = random.Random(20240601)
    nonempty = 0
    for case in range(100):
        tree = random_tree(rng, depth=4, fanout=5)
        pattern = pattern_from_tree(rng, tree) if case % 2 == 0 else random_pattern(rng)
        got = [assignment_key(m) for m in match_at(pattern, tree)]
        expected = oracle_match_set(pattern, tree)
        assert len(got) == len(set(got))
        assert set(got) == expected, f"case {case}"
        nonempty += bool(expected)
    five = node("ARGUMENT_LIST", *(leaf("identifier", c) for c in "abmuv"))
    wrong_arg = parse_pattern("(ARGUMENT_LIST (_)* @pre (_) @wrong_arg (_)* @post)")
    assert len(match_at(wrong_arg, five)) == 5
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    acceptance(f"100 cases ({nonempty} with matches) agree, 5-child list gives 5, {elapsed:.3f}s")


def _leaf_texts_agree(tree, fragment):
    for _, n in tree.walk():
        if n.leaf_text is not None:
            assert fragment.slice(n.span).decode() == n.leaf_text, n


@pytest.mark.criterion(3)
def test_closure_14_end_to_end(acceptance):
    start = time.perf_counter()
    elements = load_elements(SAMPLE)
    app = elements[("application", "CORRECT_ARGUMENT_IN_CALL_1_CLOSURE_14")]
    fix = elements[("fix", "CORRECT_ARGUMENT_IN_CALL_1")]
    bug = elements[("bug", "WRONG_ARGUMENT_IN_CALL_1")]
    example = elements[("example", "CLOSURE_14")]
    published_app = load_elements(PUBLISHED)[("application", "CORRECT_ARGUMENT_IN_CALL_1_CLOSURE_14")]
    assert app.tree == published_app.tree and app.parameters == published_app.parameters

    hunk = example.hunks[0]
    before = recorded_to_tree(app.tree, before_fragment(hunk))
    after_file = parse_tree((SAMPLE / "trees" / "closure_14.after.tree").read_text())
    _leaf_texts_agree(after_file, after_fragment(hunk))
    after = after_file.child_at((2,))

    report = verify_application(app, bug, fix, example, before, after)
    assert [r.status for r in report.stage_results] == [Status.PASS] * 4

    ((name, _),) = app.parameters
    mutated = parse_template('(field_access object: (identifier "Branch") field: (identifier "UNCOND"))')
    flipped = verify_application(replace(app, parameters=((name, mutated),)), bug, fix, example, before, after)
    assert flipped.status(Stage.AFTER_EQUAL) is Status.FAIL
    assert [r.status for r in flipped.stage_results[:3]] == [Status.PASS] * 3
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    acceptance(f"4/4 stages PASS; ON_EX->UNCOND flips AFTER_EQUAL to FAIL; {elapsed:.3f}s")


@pytest.mark.criterion(4)
def test_span_convention(acceptance):
    elements = load_elements(PUBLISHED)
    app = elements[("application", "CORRECT_ARGUMENT_IN_CALL_1_CLOSURE_14")]
    fragment = before_fragment(elements[("example", "CLOSURE_14")].hunks[0])
    assert app.tree.span == Span.of(766, 28, 766, 66)
    sliced = fragment.slice(app.tree.span)
    assert sliced == b"(fromNode, Branch.UNCOND, finallyNode)"
    assert len(sliced) == 38
    acceptance(f"{sliced.decode()!r}, {len(sliced)} bytes")


@pytest.mark.criterion(5)
def test_json_golden(acceptance, tmp_path):
    db, _ = load_repository(PUBLISHED)
    outputs = []
    for run_dir in (tmp_path / "a", tmp_path / "b"):
        emit_json(db, run_dir)
        outputs.append((run_dir / "bugs" / "wrong_return_statement_1.json").read_bytes())
    assert outputs[0] == outputs[1]
    emitted = json.loads(outputs[0])
    golden = json.loads((PUBLISHED / "09_wrong_return_statement_1.json").read_text())
    assert set(emitted) == {"id", "where", "where_raw", "fixes"}
    assert emitted == golden
    acceptance("keys id/where/where_raw/fixes equal the golden object; byte-identical across runs")


@pytest.mark.criterion(6)
def test_hunk_roundtrip(acceptance):
    hunk = load_elements(PUBLISHED)[("example", "CLOSURE_14")].hunks[0]
    assert apply_hunk(before_fragment(hunk).text, rebase(hunk)) == after_fragment(hunk).text
    rng = random.Random(6)
    vocabulary = ["int x = 0;", "return x;", "}", "", "  foo(a, b);", "if (y) {"]
    for _ in range(200):
        old = [rng.choice(vocabulary) for _ in range(rng.randint(0, 12))]
        i = rng.randint(0, len(old))
        j = rng.randint(i, len(old))
        new = old[:i] + [rng.choice(vocabulary) for _ in range(rng.randint(0, 4))] + old[j:]
        start = rng.randint(1, 50)
        padding = [f"pad {k}" for k in range(start - 1)]
        h = make_hunk(old, new, start)
        text = "".join(l + "\n" for l in padding + old)
        assert apply_hunk(text, h) == "".join(l + "\n" for l in padding + new)
        assert apply_hunk(before_fragment(h).text, rebase(h)) == after_fragment(h).text
    acceptance("published hunk plus 200 random single edits reproduce the after text")


@pytest.mark.criterion(7)
def test_mapper_convergence(acceptance):
    elements = load_elements(PUBLISHED)
    langs = group_languages([elements[("language", "JAVA_ARRAY_ACCESS")],
                             elements[("language", "PYTHON_ARRAY_ACCESS")]])
    registry = validate_registry([
        ConstructDef("ARRAY_ACCESS", ("EXPRESSION",), (FeatureDef("array", "EXPRESSION"),
                                                       FeatureDef("index", "EXPRESSION"))),
        ConstructDef("ASSIGNMENT_INSTRUCTION", ("INSTRUCTION",)),
    ])
    java = node("assignment_instruction", ("left", leaf("identifier", "y")),
                ("right", node("array_access", ("array", leaf("identifier", "xs")),
                               ("index", leaf("identifier", "i")))))
    python = node("subscript", ("value", leaf("identifier", "xs")), ("subscript", leaf("identifier", "i")))
    from_java = translate(java, langs["JAVA"], registry).child_at((1,))
    from_python = translate(python, langs["PYTHON"], registry)
    assert from_java.construct_name == "ARRAY_ACCESS"
    assert structural_equals(from_java, from_python)
    rng = random.Random(7)
    for _ in range(50):
        t = random_tree(rng)
        assert translate(t, LanguageDef("EMPTY"), registry) == t
    acceptance("Java and Python ARRAY_ACCESS agree; empty language is identity on 50 trees")


@pytest.mark.criterion(8)
def test_validator_flags_fix_capture_mismatch(acceptance):
    elements = load_elements(PUBLISHED)
    diags = check_fix_captures(elements[("fix", "CORRECT_ARGUMENT_IN_CALL_2")],
                               elements[("bug", "WRONG_ARGUMENT_IN_CALL_2")])
    assert sorted(d.feature for d in diags) == ["@final", "@initial"]
    assert len(diags) == 2
    acceptance("unknown captures: " + ", ".join(d.feature for d in diags))


@pytest.mark.criterion(9)
def test_link_closure(acceptance, tmp_path, capsys):
    import io

    assert run(["build", "--repo", str(SAMPLE), "--out", str(tmp_path)], io.StringIO()) == 0
    problems = dangling(tmp_path)
    assert problems == []
    files = sum(1 for p in tmp_path.rglob("*") if p.is_file())
    acceptance(f"{files} files, 0 dangling references")
