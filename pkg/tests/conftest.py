"""Shared pytest plumbing.

The acceptance tests record one verdict line per criterion here; the hook
below re-prints them after the run so they are visible regardless of
pytest's output capturing.
"""

acceptance_verdicts: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_verdicts:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_verdicts:
            terminalreporter.write_line(line)
