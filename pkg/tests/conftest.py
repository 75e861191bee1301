"""Acceptance bookkeeping: one pass/fail line per numbered criterion in the terminal summary."""
import pytest

_RESULTS: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    marker = getattr(report, "_criterion", None)
    if marker is None:
        return
    number, title = marker
    entry = _RESULTS.setdefault(number, {"title": title, "passed": True, "tests": 0, "duration": 0.0})
    entry["duration"] += report.duration
    if report.when == "call":
        entry["tests"] += 1
    if report.outcome == "failed" or (report.when == "call" and report.outcome != "passed"):
        entry["passed"] = False


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep._criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_RESULTS):
        e = _RESULTS[number]
        status = "PASS" if e["passed"] else "FAIL"
        tr.write_line(f"criterion {number:2d} {status}  {e['title']}  ({e['tests']} test(s), {e['duration']:.1f} s)")
