"""Collects one verdict line per acceptance criterion and prints them at the end of the session."""

import pytest

_LINES = []


@pytest.fixture
def verdict(request):
    """Call verdict(label, passed, detail) once per criterion."""
    def record(label, passed, detail=""):
        line = "%s: %s  %s" % (label, "PASS" if passed else "FAIL", detail)
        _LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
