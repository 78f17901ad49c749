"""Shared pytest wiring: collect acceptance one-liners and echo them at the end."""

_ACCEPTANCE_LINES: list[str] = []

import pytest


@pytest.fixture(scope="session")
def acceptance_log():
    """Append one formatted line per acceptance criterion; echoed in the summary."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
