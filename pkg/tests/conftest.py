"""Shared pytest hooks.

Acceptance tests register one line per criterion through the
``acceptance`` fixture; the terminal-summary hook prints them after the
run so a single scan shows which guarantees hold.  Tests record before
asserting, so a line appears even for failing criteria.
"""

import pytest

_LINES = {}


class _Recorder:

    def record(self, criterion, passed, detail):
        _LINES[int(criterion)] = (bool(passed), str(detail))
        return bool(passed)


@pytest.fixture(scope="session")
def acceptance():
    return _Recorder()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_LINES):
        passed, detail = _LINES[criterion]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[criterion {criterion:02d}] {status} {detail}")
