"""Replay a recorded application against its example's before/after trees."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .errors import BugfixError
from .matcher import MatchResult, find_matches
from .model import EMPTY_REGISTRY, Registry, Span, UNode, structural_equals
from .rewriter import apply_fix, param_env
from .specparse import BUG_CAPTURE, ApplicationSpec, BugSpec, ExampleSpec, FixSpec, captures


class Stage(enum.Enum):
    SPAN_MATCH = "SPAN_MATCH"
    CAPTURE_SPANS = "CAPTURE_SPANS"
    FIX_APPLY = "FIX_APPLY"
    AFTER_EQUAL = "AFTER_EQUAL"


class Status(enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    SKIPPED = "SKIPPED"


@dataclass(frozen=True)
class StageResult:
    stage: Stage
    status: Status
    detail: str = ""


@dataclass(frozen=True)
class VerifyReport:
    application_id: str
    stage_results: tuple[StageResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.status is Status.PASS for r in self.stage_results)

    @property
    def failed(self) -> bool:
        return any(r.status is Status.FAIL for r in self.stage_results)

    def status(self, stage: Stage) -> Status:
        for r in self.stage_results:
            if r.stage is stage:
                return r.status
        raise KeyError(stage)


def _report(app_id: str, results: list[StageResult]) -> VerifyReport:
    done = {r.stage for r in results}
    failed = any(r.status is Status.FAIL for r in results)
    for stage in Stage:
        if stage not in done:
            results.append(StageResult(stage, Status.SKIPPED, "earlier stage failed" if failed else ""))
    return VerifyReport(app_id, tuple(results))


def _spans(match: MatchResult, name: str) -> list[Optional[Span]]:
    return [n.span for n in match.bindings[name].nodes]


def _capture_misses(match: MatchResult, recorded: dict[str, list[Span]], names: list[str]) -> list[str]:
    misses = []
    for name in names:
        if name == BUG_CAPTURE:
            continue
        got = _spans(match, name)
        want = recorded.get(name, [])
        if got != want:
            shown = ", ".join(str(s) for s in got) or "nothing"
            misses.append(f"{name} matched {shown}, recorded {', '.join(str(s) for s in want) or 'nothing'}")
    for name in recorded:
        if name not in match.bindings:
            misses.append(f"{name} is recorded but the pattern has no such capture")
    return misses


def verify_application(app: ApplicationSpec, bug: BugSpec, fix: FixSpec,
                       example: Optional[ExampleSpec], before_tree: Optional[UNode],
                       after_tree: Optional[UNode], registry: Registry = EMPTY_REGISTRY) -> VerifyReport:
    if app.detached:
        return VerifyReport(app.id, tuple(StageResult(s, Status.SKIPPED, "detached application")
                                          for s in Stage))
    if app.tree is None or before_tree is None or after_tree is None:
        missing = [name for name, value in (("recorded tree", app.tree), ("before tree", before_tree),
                                            ("after tree", after_tree)) if value is None]
        return _report(app.id, [StageResult(Stage.SPAN_MATCH, Status.FAIL,
                                             "missing " + ", ".join(missing))])

    results: list[StageResult] = []
    root_span = app.tree.span
    anchored = [m for m in find_matches(bug.where, before_tree, registry) if m.root.span == root_span]
    if not anchored:
        results.append(StageResult(Stage.SPAN_MATCH, Status.FAIL,
                                   f"bug {bug.id} has no match spanning {root_span}"))
        return _report(app.id, results)
    results.append(StageResult(Stage.SPAN_MATCH, Status.PASS,
                               f"{len(anchored)} match(es) at {root_span}"))

    recorded = app.tree.capture_spans()
    names = captures(bug.where)
    chosen, nearest = None, None
    for m in anchored:
        misses = _capture_misses(m, recorded, names)
        if not misses:
            chosen = m
            break
        if nearest is None or len(misses) < len(nearest):
            nearest = misses
    if chosen is None:
        results.append(StageResult(Stage.CAPTURE_SPANS, Status.FAIL, "; ".join(nearest)))
        return _report(app.id, results)
    results.append(StageResult(Stage.CAPTURE_SPANS, Status.PASS,
                               ", ".join(n for n in names if n in recorded)))

    try:
        params = param_env(app.parameter_map())
        fixed = apply_fix(before_tree, chosen, fix, params)
        produced = fixed.child_at(chosen.path)
    except BugfixError as exc:
        results.append(StageResult(Stage.FIX_APPLY, Status.FAIL, str(exc)))
        return _report(app.id, results)
    results.append(StageResult(Stage.FIX_APPLY, Status.PASS, f"fix {fix.id} applied"))

    try:
        expected = after_tree.child_at(chosen.path)
    except IndexError:
        results.append(StageResult(Stage.AFTER_EQUAL, Status.FAIL,
                                   f"after tree has no node at path {list(chosen.path)}"))
        return _report(app.id, results)
    if structural_equals(produced, expected):
        results.append(StageResult(Stage.AFTER_EQUAL, Status.PASS, "fixed subtree equals after tree"))
    else:
        results.append(StageResult(Stage.AFTER_EQUAL, Status.FAIL,
                                   "fixed subtree differs from the after tree"))
    return _report(app.id, results)


def recorded_to_tree(recorded, fragment) -> UNode:
    """Concrete tree from a recorded tree, leaf text sliced from the fragment."""
    children = tuple((child.field, recorded_to_tree(child, fragment)) for child in recorded.children)
    text = None
    if not children:
        text = fragment.slice(recorded.span).decode("utf-8")
    return UNode(recorded.type_name, children, text, recorded.span)
