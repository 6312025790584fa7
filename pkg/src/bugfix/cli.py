"""Command-line entry point: validate, match, apply, verify, build."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .corpus import after_fragment, before_fragment
from .errors import BugfixError, PluginError
from .mapper import run_parser_plugin
from .matcher import MatchResult, find_matches
from .model import canon
from .rewriter import apply_fix, param_env
from .specparse import parse_bindings
from .store import Database, emit_html, emit_json, load_repository
from .treefile import format_tree, parse_tree
from .verify import Stage, Status, StageResult, VerifyReport, verify_application

EXIT_OK, EXIT_FAILURES, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_repo() -> str:
    return os.environ.get("BUGFIX_REPO") or "."


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bugfix", description="Bugfix specification toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="load a repository and print its diagnostics")
    p.add_argument("dir", nargs="?", default=None, help="repository directory (default: --repo)")
    p.add_argument("--repo", default=None)

    p = sub.add_parser("match", help="print every match of a bug pattern as JSON lines")
    p.add_argument("--bug", required=True)
    p.add_argument("--tree", required=True, help="tree file")
    p.add_argument("--repo", default=None)
    p.add_argument("--language", help="restrict kind matching to this language's constructs")

    p = sub.add_parser("apply", help="apply a fix at a match and print the rewritten tree")
    p.add_argument("--fix", required=True)
    p.add_argument("--tree", required=True, help="tree file")
    p.add_argument("--params", help="file of '@name = (sexp)' lines")
    p.add_argument("--match", type=int, default=0, metavar="N", help="which match to rewrite (default 0)")
    p.add_argument("--repo", default=None)

    p = sub.add_parser("verify", help="replay recorded applications")
    p.add_argument("applications", nargs="*", metavar="application-id")
    p.add_argument("--repo", default=None)
    p.add_argument("--parser", metavar="CMD",
                   help="parser plugin used when no <example>.before/.after.tree files exist")

    p = sub.add_parser("build", help="emit the JSON API and HTML catalog")
    p.add_argument("--repo", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--no-html", action="store_true")
    return parser


def _load(repo: Optional[str]) -> Database:
    root = Path(repo or _default_repo())
    if not root.is_dir():
        raise FileNotFoundError(f"repository {root} is not a directory")
    db, _ = load_repository(root)
    return db


def _read_tree(path: str):
    return parse_tree(Path(path).read_text(encoding="utf-8"))


def _span(node) -> Optional[list]:
    return node.span.as_list() if node.span else None


def match_json(m: MatchResult) -> dict:
    return {
        "path": list(m.path),
        "captures": {name: [_span(n) for n in b.nodes] for name, b in m.bindings.items()},
        "capture_paths": {name: [list(m.path + p) for p in b.paths] for name, b in m.bindings.items()},
    }


def cmd_validate(args, out) -> int:
    root = Path(args.dir or args.repo or _default_repo())
    if not root.is_dir():
        raise FileNotFoundError(f"repository {root} is not a directory")
    _, diagnostics = load_repository(root)
    for d in diagnostics:
        print(d, file=out)
    return EXIT_FAILURES if diagnostics else EXIT_OK


def cmd_match(args, out) -> int:
    db = _load(args.repo)
    bug = db.get("bugs", args.bug)
    if bug is None:
        raise LookupError(f"no bug {args.bug}")
    language = db.language_constructs(args.language) if args.language else None
    for m in find_matches(bug.where, _read_tree(args.tree), db.registry, language):
        print(json.dumps(match_json(m), sort_keys=True), file=out)
    return EXIT_OK


def cmd_apply(args, out) -> int:
    db = _load(args.repo)
    fix = db.get("fixes", args.fix)
    if fix is None:
        raise LookupError(f"no fix {args.fix}")
    bug = db.get("bugs", fix.bug_id)
    tree = _read_tree(args.tree)
    params = {}
    if args.params:
        params = param_env(dict(parse_bindings(Path(args.params).read_text(encoding="utf-8"))))
    matches = find_matches(bug.where, tree, db.registry)
    if not 0 <= args.match < len(matches):
        print(f"bug {bug.id} has {len(matches)} match(es); no match number {args.match}", file=sys.stderr)
        return EXIT_FAILURES
    print(format_tree(apply_fix(tree, matches[args.match], fix, params)), file=out)
    return EXIT_OK


def _tree_files(root: Path) -> dict[str, Path]:
    found = {}
    for path in sorted(root.rglob("*.tree")):
        found.setdefault(path.name.lower(), path)
    return found


def _example_trees(db: Database, root: Path, example, plugin: Optional[str], trees: dict[str, Path]):
    base = example.id.lower()
    before = trees.get(f"{base}.before.tree")
    after = trees.get(f"{base}.after.tree")
    if before and after:
        return _read_tree(before), _read_tree(after)
    if plugin:
        hunk = example.hunks[0]
        b, a = before_fragment(hunk), after_fragment(hunk)
        return (run_parser_plugin(plugin, b.text, example.language, b.start_row),
                run_parser_plugin(plugin, a.text, example.language, a.start_row))
    return None, None


def verify_all(db: Database, root: Path, ids: Sequence[str] = (), plugin: Optional[str] = None) -> list[VerifyReport]:
    keys = [canon(i) for i in ids] if ids else sorted(db.applications)
    trees = _tree_files(root)
    reports = []
    for key in sorted(keys, key=str.lower):
        app = db.applications.get(key)
        if app is None:
            reports.append(VerifyReport(key.lower(), (StageResult(
                Stage.SPAN_MATCH, Status.FAIL, "no such application"),) + tuple(
                StageResult(s, Status.SKIPPED, "earlier stage failed") for s in list(Stage)[1:])))
            continue
        fix = db.fixes[canon(app.fix_id)]
        bug = db.bugs[canon(fix.bug_id)]
        example = db.examples.get(canon(app.example_id)) if app.example_id else None
        before = after = None
        if example is not None:
            before, after = _example_trees(db, root, example, plugin, trees)
        reports.append(verify_application(app, bug, fix, example, before, after, db.registry))
    return reports


def cmd_verify(args, out) -> int:
    root = Path(args.repo or _default_repo())
    db = _load(str(root))
    reports = verify_all(db, root, args.applications, args.parser)
    print("application\tstage\tstatus\tdetail", file=out)
    for report in reports:
        for r in report.stage_results:
            print(f"{report.application_id.lower()}\t{r.stage.value}\t{r.status.value}\t{r.detail}", file=out)
    return EXIT_FAILURES if any(r.failed for r in reports) else EXIT_OK


def cmd_build(args, out) -> int:
    root = Path(args.repo or _default_repo())
    if not root.is_dir():
        raise FileNotFoundError(f"repository {root} is not a directory")
    db, diagnostics = load_repository(root)
    for d in diagnostics:
        print(d, file=sys.stderr)
    manifest = emit_json(db, args.out)
    if not args.no_html:
        manifest += emit_html(db, args.out)
    print(f"wrote {len(manifest)} files to {args.out}", file=out)
    return EXIT_FAILURES if diagnostics else EXIT_OK


_COMMANDS = {"validate": cmd_validate, "match": cmd_match, "apply": cmd_apply,
             "verify": cmd_verify, "build": cmd_build}


def run(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args, out)
    except (OSError, LookupError, PluginError) as exc:
        print(f"bugfix: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BugfixError as exc:
        print(f"bugfix: {exc}", file=sys.stderr)
        return EXIT_FAILURES


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
