import sys
from pathlib import Path

import pytest

# test-side oracles live next to the tests
sys.path.insert(0, str(Path(__file__).parent))

EXPERIMENTS = Path(__file__).resolve().parent.parent / "experiments"

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.fixture
def experiment():
    from hehcnoma.harness import load_config

    return lambda name: load_config(EXPERIMENTS / f"{name}.json")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "failed": False, "ran": False})
    if report.when == "call" or report.failed:
        entry["ran"] = True
        entry["failed"] |= report.failed


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = "FAIL" if entry["failed"] else ("PASS" if entry["ran"] else "SKIP")
        terminalreporter.write_line(f"criterion {number}: {status}  {entry['title']}")
