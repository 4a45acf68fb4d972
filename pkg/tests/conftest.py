"""Shared pytest plumbing.

The acceptance tests double as the release gate, so the terminal summary
prints one PASS/FAIL line per criterion after the run.
"""

_acceptance_results = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _acceptance_results.append((name, report.outcome))
    elif report.failed:
        # setup/teardown crash counts as a failed criterion
        _acceptance_results.append((name, "failed"))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance_results:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{name}: {verdict}")
