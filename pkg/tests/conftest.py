"""Acceptance summary: tests marked ``criterion(number, text)`` are grouped by
number and reported as one pass/fail line each at the end of the run."""

import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, text = marker.args
    entry = _RESULTS.setdefault(number, {"text": text, "outcomes": [], "notes": []})
    if report.when == "call" or report.failed or report.skipped:
        entry["outcomes"].append("skip" if report.skipped else "fail" if report.failed else "pass")
    if report.when == "call":
        entry["notes"].extend(f"{key} {value}" for key, value in item.user_properties)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        entry = _RESULTS[number]
        outcomes = entry["outcomes"]
        if "fail" in outcomes:
            status = "FAIL"
        elif outcomes and all(o == "pass" for o in outcomes):
            status = "PASS"
        else:
            status = "SKIP"
        notes = "; ".join(entry["notes"])
        line = f"criterion {number:>2}: {status:<4} {entry['text']}"
        terminalreporter.write_line(line + (f" ({notes})" if notes else ""))
