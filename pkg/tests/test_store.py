import json
import shutil

import pytest

from bugfix.specparse import parse_pattern
from bugfix.store import COLLECTIONS, emit_html, emit_json, load_repository, pattern_json
from conftest import PUBLISHED, SAMPLE
from crawler import dangling


def test_published_repository():
    db, diags = load_repository(PUBLISHED)
    assert len(db.bugs) >= 3
    assert len(db.fixes) >= 2
    assert len(db.applications) >= 1
    assert len(db.examples) == 1
    assert len(db.constructs) == 3
    assert sum(len(lang.mappings) for lang in db.languages.values()) == 2
    unknown = [d for d in diags if d.code == "UnknownCapture"]
    assert {d.feature for d in unknown} == {"@initial", "@final"}
    assert {d.element_id for d in unknown} == {"CORRECT_ARGUMENT_IN_CALL_2"}
    dangling_refs = [d for d in diags if d.code == "DanglingReference"]
    assert [d.element_id for d in dangling_refs] == ["CORRECT_ARGUMENT_IN_CALL_1_CLOSURE_14"]
    assert not any(d.code == "SyntaxError" for d in diags)


def test_sample_repository_is_clean():
    db, diags = load_repository(SAMPLE)
    assert diags == []
    assert db.fixes_of_bug["WRONG_ARGUMENT_IN_CALL_1"] == ["CORRECT_ARGUMENT_IN_CALL_1"]
    assert db.applications_of_example["CLOSURE_14"] == ["CORRECT_ARGUMENT_IN_CALL_1_CLOSURE_14"]
    assert set(db.kinds) == {"INSTRUCTION", "EXPRESSION"}


def test_reverse_links_consistent():
    db, _ = load_repository(SAMPLE)
    for bug, fixes in db.fixes_of_bug.items():
        assert all(db.fixes[f].bug_id.upper() == bug for f in fixes)
    for fix in db.fixes.values():
        assert fix.id.upper() in db.fixes_of_bug[fix.bug_id.upper()]
    for fix, apps in db.applications_of_fix.items():
        assert all(db.applications[a].fix_id.upper() == fix for a in apps)


def test_empty_directory(tmp_path):
    db, diags = load_repository(tmp_path)
    assert diags == [] and all(len(db[c]) == 0 for c in COLLECTIONS)
    manifest = emit_html(db, tmp_path / "out")
    assert sorted(manifest) == sorted(["index.html"] + [f"{c}.html" for c in COLLECTIONS])


def test_dangling_fix(tmp_path):
    for path in SAMPLE.glob("*.bugfix"):
        shutil.copy(path, tmp_path)
    text = (tmp_path / "wrong_return_statement.bugfix").read_text()
    bugless = text.replace("bug WRONG_RETURN_STATEMENT_1\nwhere\n  (return_statement return_value: (true) @wrong_value)\nfix CORRECT_RETURN_STATEMENT_1\nthen\n  (return_statement return_value: (false))\nend",
                           "fix CORRECT_RETURN_STATEMENT_1\nbug_id\n  WRONG_RETURN_STATEMENT_1\nthen\n  (return_statement return_value: (false))\nend")
    assert bugless != text
    (tmp_path / "wrong_return_statement.bugfix").write_text(bugless)
    db, diags = load_repository(tmp_path)
    fix_diags = [d for d in diags if d.element_id == "CORRECT_RETURN_STATEMENT_1"]
    assert [d.code for d in fix_diags] == ["DanglingReference"]
    assert "CORRECT_RETURN_STATEMENT_1" not in db.fixes


def test_syntax_errors_are_collected(tmp_path):
    (tmp_path / "bad.bugfix").write_text("bug X\nwhere\n  (A\nend\n\nbug Y\nwhere\n  (B)\nend\n")
    db, diags = load_repository(tmp_path)
    assert [d.code for d in diags] == ["SyntaxError"]
    assert diags[0].element_id == "bad.bugfix:3:5"
    assert list(db.bugs) == ["Y"]


def test_unreadable_file(tmp_path):
    (tmp_path / "bin.bugfix").write_bytes(b"\xff\xfe\x00bug")
    _, diags = load_repository(tmp_path)
    assert [d.code for d in diags] == ["IoError"]


def test_bug_json_golden(tmp_path):
    db, _ = load_repository(SAMPLE)
    emit_json(db, tmp_path)
    emitted = json.loads((tmp_path / "bugs" / "wrong_return_statement_1.json").read_text())
    golden = json.loads((PUBLISHED / "09_wrong_return_statement_1.json").read_text())
    assert emitted == golden


def test_two_bug_index(tmp_path):
    (tmp_path / "b.bugfix").write_text("bug ONE\nwhere\n  (a)\nend\nbug TWO\nwhere\n  (b)\nend\n")
    db, _ = load_repository(tmp_path)
    emit_json(db, tmp_path / "out")
    index = json.loads((tmp_path / "out" / "bugs.json").read_text())
    assert sorted(index) == ["one", "two"]
    assert json.loads((tmp_path / "out" / "bugs" / "one.json").read_text())["fixes"] == []


def test_json_raw_roundtrip(tmp_path):
    db, _ = load_repository(SAMPLE)
    emit_json(db, tmp_path)
    checked = 0
    for path in tmp_path.glob("*/*.json"):
        element = json.loads(path.read_text())
        if "where_raw" in element:
            assert pattern_json(parse_pattern(element["where_raw"])) == element["where"]
            checked += 1
        for m in element.get("mappings", []):
            assert pattern_json(parse_pattern(m["source_raw"])) == m["source"]
            checked += 1
    assert checked >= 5


def test_emission_is_deterministic(tmp_path):
    db, _ = load_repository(SAMPLE)
    a, b = tmp_path / "a", tmp_path / "b"
    ma = emit_json(db, a) + emit_html(db, a)
    mb = emit_json(db, b) + emit_html(db, b)
    assert ma == mb
    for rel in ma:
        assert (a / rel).read_bytes() == (b / rel).read_bytes()


def test_html_links(tmp_path):
    db, _ = load_repository(SAMPLE)
    emit_html(db, tmp_path)
    emit_json(db, tmp_path)
    bug_page = (tmp_path / "bugs" / "wrong_argument_in_call_1.html").read_text()
    assert 'href="../fixes/correct_argument_in_call_1.html"' in bug_page
    assert 'href="#capture-wrong_arg"' in bug_page and 'id="capture-wrong_arg"' in bug_page
    app_page = (tmp_path / "applications" / "correct_argument_in_call_1_closure_14.html").read_text()
    assert 'href="../examples/closure_14.html"' in app_page
    assert 'href="../fixes/correct_argument_in_call_1.html"' in app_page
    kind_page = (tmp_path / "kinds" / "expression.html").read_text()
    assert 'href="../constructs/array_access.html"' in kind_page
    assert dangling(tmp_path) == []


def test_crawler_detects_breakage(tmp_path):
    db, _ = load_repository(SAMPLE)
    emit_html(db, tmp_path)
    emit_json(db, tmp_path)
    (tmp_path / "fixes" / "correct_argument_in_call_1.html").unlink()
    (tmp_path / "examples" / "closure_14.json").unlink()
    problems = dangling(tmp_path)
    assert any("correct_argument_in_call_1.html" in p for p in problems)
    assert any("closure_14" in p for p in problems)
