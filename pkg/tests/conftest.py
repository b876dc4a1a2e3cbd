"""Terminal summary listing one PASS/FAIL line per acceptance criterion."""

from __future__ import annotations

import pytest

_CRITERIA: dict[str, bool] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(name): names an acceptance criterion this test gates"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    name = marker.args[0]
    if report.when == "setup" and report.failed:
        _CRITERIA[name] = False
    elif report.when == "call":
        _CRITERIA[name] = report.passed


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed in _CRITERIA.items():
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}")
