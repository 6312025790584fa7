import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(Path(__file__).resolve().parent))

PUBLISHED = ROOT / "corpus" / "published"
SAMPLE = ROOT / "corpus" / "sample"
DATA = Path(__file__).resolve().parent / "data"


def load_elements(directory: Path) -> dict:
    from bugfix.specparse import parse_document

    out = {}
    for path in sorted(directory.glob("*.bugfix")):
        for element in parse_document(path.read_text(encoding="utf-8")):
            out.setdefault((element.element_kind, element.id), element)
    return out


@pytest.fixture(scope="session")
def published():
    return load_elements(PUBLISHED)


@pytest.fixture(scope="session")
def sample():
    return load_elements(SAMPLE)


@pytest.fixture(scope="session")
def closure_trees():
    from bugfix.treefile import parse_tree

    trees = SAMPLE / "trees"
    return (parse_tree((trees / "closure_14.before.tree").read_text()),
            parse_tree((trees / "closure_14.after.tree").read_text()))


_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    number = request.node.get_closest_marker("criterion").args[0]
    state = {"detail": ""}

    def note(detail: str):
        state["detail"] = detail

    yield note
    outcome = getattr(request.node, "rep_call", None)
    passed = outcome is not None and outcome.passed
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {request.node.name}  {state['detail']}"
    print(line)
    _ACCEPTANCE.append(line)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    report = (yield).get_result()
    if report.when == "call":
        item.rep_call = report


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
