"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    n = marker.args[0]
    detail = dict(item.user_properties).get("detail", "")
    prev = _results.get(n, (True, 0.0, []))
    details = prev[2] + ([detail] if detail else [])
    _results[n] = (prev[0] and report.passed, prev[1] + report.duration, details)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        passed, seconds, details = _results[n]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {status} ({seconds:.1f}s) {'; '.join(details)}".rstrip())
