"""Shared pytest configuration.

Tests marked with @pytest.mark.criterion(n) feed a summary block that
prints one PASS/FAIL line per acceptance criterion at the end of the run.
"""

from __future__ import annotations

import pytest

_RESULTS: dict[int, bool] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(n): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = int(marker.args[0])
    if report.when == "call":
        _RESULTS[n] = report.passed and _RESULTS.get(n, True)
    elif report.failed:
        _RESULTS[n] = False


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        status = "PASS" if _RESULTS[n] else "FAIL"
        terminalreporter.write_line(f"[criterion {n}] {status}")
