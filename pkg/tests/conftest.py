import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bellbattery import _accel  # noqa: E402
from corpus import behavior_corpus  # noqa: E402

_CRITERIA = []


@pytest.fixture(scope="session")
def corpus():
    return behavior_corpus()


requires_numba = pytest.mark.skipif(not _accel.NUMBA_AVAILABLE, reason="numba disabled or missing")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    criterion = dict(report.user_properties).get("criterion")
    if criterion is not None:
        _CRITERIA.append((criterion, report.outcome, report.nodeid))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, outcome, nodeid in sorted(_CRITERIA):
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{mark}] {criterion}")
