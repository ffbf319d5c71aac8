import sys


def pytest_terminal_summary(terminalreporter):
    # Gate verdicts live in the acceptance module; echo them uncaptured so a
    # plain `pytest` run shows one line per criterion.
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "GATE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
