"""Shared pytest wiring.

Acceptance-gate tests record a ``criterion`` user property; this plugin
replays them as one status line each in the terminal summary so a full run
ends with a compact pass/fail scoreboard.
"""

_acceptance: list[tuple[str, str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    _acceptance.append((props["criterion"], status, props.get("detail", "")))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance:
        return
    terminalreporter.section("acceptance checks")
    for name, status, detail in _acceptance:
        line = f"{status}  {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
