"""Per-criterion verdict lines for the acceptance suite.

Tests marked ``criterion(num, label)`` print one PASS/FAIL/SKIP line on
the real stdout, bypassing capture, so the verdict is visible in the
normal pytest output regardless of how the test ends.
"""

import pytest


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    num, label = mark.args
    if report.passed:
        status = "PASS"
    elif report.skipped:
        status = "SKIP"
    else:
        status = "FAIL"
    line = f"criterion {num:2d} {status}  {label}"
    capman = item.config.pluginmanager.getplugin("capturemanager")
    if capman is not None:
        with capman.global_and_fixture_disabled():
            print(f"\n{line}", flush=True)
    else:
        print(f"\n{line}", flush=True)
