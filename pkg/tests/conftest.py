from __future__ import annotations


def pytest_terminal_summary(terminalreporter):
    from util import ACCEPTANCE
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
