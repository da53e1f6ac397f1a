import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from disfleval import mini_corpus_dir

_ACCEPTANCE: dict[str, str] = {}


@pytest.fixture(scope="session")
def mini_dir() -> Path:
    return mini_corpus_dir()


def pytest_runtest_logreport(report):
    name = report.nodeid.split("::")[-1]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        outcome = _ACCEPTANCE[name]
        verdict = "PASS" if outcome == "passed" else outcome.upper()
        terminalreporter.write_line(f"{verdict} {name}")
