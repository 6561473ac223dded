import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance verdict lines into the terminal summary.

    The acceptance tests record one PASS/FAIL line each; per-test capture
    would hide the lines of passing tests, so they are replayed here where
    they always reach the real terminal.
    """
    module = (sys.modules.get("test_acceptance")
              or sys.modules.get("tests.test_acceptance"))
    lines = getattr(module, "ACCEPTANCE_LINES", ())
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
