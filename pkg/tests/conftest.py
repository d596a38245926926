"""Shared pytest plumbing.

The acceptance module records one line per criterion; pytest captures
stdout from passing tests, so the lines are replayed in the terminal
summary where they are always visible.
"""

_ACCEPTANCE_LINES = []


def record_criterion(line: str) -> None:
    print(line)
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
