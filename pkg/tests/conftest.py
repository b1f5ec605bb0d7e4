"""Shared test plumbing.

The acceptance module records one [PASS]/[FAIL] line per criterion while
it runs; pytest captures that stdout, so the hook below reprints the
collected report after the summary where it is always visible.
"""

import sys


def pytest_terminal_summary(terminalreporter):
    for name, module in sys.modules.items():
        if name.rpartition(".")[2] != "test_acceptance":
            continue
        lines = getattr(module, "REPORT", None)
        if lines:
            terminalreporter.section("acceptance report")
            for line in lines:
                terminalreporter.write_line(line)
        return
