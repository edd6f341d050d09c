"""Shared pytest hooks.

The acceptance tests record one checklist line each; re-emit them in the
terminal summary so they are visible without -s.
"""

acceptance_lines: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_lines:
        terminalreporter.section("acceptance checklist")
        for line in acceptance_lines:
            terminalreporter.write_line(line)
