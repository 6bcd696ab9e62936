import re

_CRITERION = re.compile(
    r"test_(?:acceptance|webui_gate)\.py::test_criterion_(\d+)_(\w+)"
)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion."""
    status = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            m = _CRITERION.search(getattr(report, "nodeid", ""))
            if m is None:
                continue
            if outcome == "passed" and report.when != "call":
                continue
            num, label = int(m.group(1)), m.group(2).replace("_", " ")
            ok = outcome == "passed"
            prev = status.get(num)
            status[num] = (label, ok if prev is None else (prev[1] and ok))
    if status:
        terminalreporter.section("acceptance criteria")
        for num in sorted(status):
            label, ok = status[num]
            terminalreporter.write_line(
                f"ACCEPTANCE {num} {label}: {'PASS' if ok else 'FAIL'}"
            )
