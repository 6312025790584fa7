from dataclasses import replace

import pytest

from bugfix.corpus import before_fragment
from bugfix.model import Point, Span
from bugfix.specparse import parse_template
from bugfix.verify import Stage, Status, recorded_to_tree, verify_application


@pytest.fixture
def closure(sample, closure_trees):
    app = sample[("application", "CORRECT_ARGUMENT_IN_CALL_1_CLOSURE_14")]
    fix = sample[("fix", "CORRECT_ARGUMENT_IN_CALL_1")]
    bug = sample[("bug", "WRONG_ARGUMENT_IN_CALL_1")]
    example = sample[("example", "CLOSURE_14")]
    return app, bug, fix, example, *closure_trees


def _statuses(report):
    return [r.status for r in report.stage_results]


def test_all_stages_pass(closure):
    report = verify_application(*closure)
    assert _statuses(report) == [Status.PASS] * 4
    assert report.passed and not report.failed


def test_stages_in_order(closure):
    report = verify_application(*closure)
    assert [r.stage for r in report.stage_results] == list(Stage)


def test_parameter_mutation_fails_after_equal(closure):
    app, *rest = closure
    ((name, value),) = app.parameters
    mutated = parse_template(
        '(field_access object: (identifier "Branch") field: (identifier "UNCOND"))')
    report = verify_application(replace(app, parameters=((name, mutated),)), *rest)
    assert report.status(Stage.FIX_APPLY) is Status.PASS
    assert report.status(Stage.AFTER_EQUAL) is Status.FAIL


def test_shifted_span_fails_span_match(closure):
    app, *rest = closure
    s = app.tree.span
    shifted = Span(Point(s.start.row, s.start.col + 1), Point(s.end.row, s.end.col + 1))
    report = verify_application(replace(app, tree=replace(app.tree, span=shifted)), *rest)
    assert _statuses(report) == [Status.FAIL, Status.SKIPPED, Status.SKIPPED, Status.SKIPPED]


def test_capture_span_mismatch(closure):
    app, *rest = closure
    pre, wrong, post = app.tree.children
    swapped = replace(app.tree, children=(replace(pre, capture=None), replace(wrong, capture="@pre"), post))
    report = verify_application(replace(app, tree=swapped), *rest)
    assert report.status(Stage.CAPTURE_SPANS) is Status.FAIL
    assert report.status(Stage.FIX_APPLY) is Status.SKIPPED


def test_missing_parameter_fails_fix_apply(closure):
    app, *rest = closure
    report = verify_application(replace(app, parameters=()), *rest)
    assert report.status(Stage.FIX_APPLY) is Status.FAIL


def test_detached_is_skipped(sample):
    app = sample[("application", "CORRECT_ARGUMENT_IN_CALL_2_APPLICATION_1")]
    bug = sample[("bug", "WRONG_ARGUMENT_IN_CALL_2")]
    report = verify_application(app, bug, bug.fixes[0], None, None, None)
    assert _statuses(report) == [Status.SKIPPED] * 4
    assert not report.passed


def test_missing_trees(closure):
    app, bug, fix, example, before, _ = closure
    report = verify_application(app, bug, fix, example, before, None)
    assert report.stage_results[0].status is Status.FAIL
    assert "after tree" in report.stage_results[0].detail


def test_recorded_tree_gives_before_tree(closure):
    app, bug, fix, example, before, after = closure
    derived = recorded_to_tree(app.tree, before_fragment(example.hunks[0]))
    assert [c.leaf_text for c in derived.nodes if c.leaf_text] == ["fromNode", "finallyNode"]
    report = verify_application(app, bug, fix, example, derived, after.child_at((2,)))
    assert report.passed
