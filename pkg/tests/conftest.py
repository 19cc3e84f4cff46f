"""Shared pytest configuration.

Prints a one-line verdict per acceptance test at the end of the run so the
pass/fail state of the whole contract is readable at a glance.
"""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    labels = {
        "passed": "PASS ",
        "failed": "FAIL ",
        "xfailed": "XFAIL",
        "xpassed": "XPASS",
        "skipped": "SKIP ",
    }
    rows = []
    for status, label in labels.items():
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" in nodeid and "::" in nodeid:
                rows.append((nodeid.split("::", 1)[1], label))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for name, label in sorted(rows):
        note = "  (documented defect)" if label == "XFAIL" else ""
        terminalreporter.write_line(f"{label} {name}{note}")
