import os
from pathlib import Path

import numpy as np
import pytest

from rmtsync.panel import LevelPanel

REPLICATION_ENV = "RMTSYNC_REPLICATION_CSV"
_criteria: dict[str, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, text): acceptance criterion this test checks")
    config.addinivalue_line("markers", "replication: needs the user-assembled GDP panel")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    key = f"AC{mark.args[0]:>2}  {mark.args[1]}"
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")
        _criteria.setdefault(key, []).append(status)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_criteria, key=lambda k: int(k[2:4])):
        statuses = _criteria[key]
        status = "FAIL" if "FAIL" in statuses else ("PASS" if "PASS" in statuses else "SKIP")
        terminalreporter.write_line(f"{status}  {key}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_panel():
    return LevelPanel(
        years=(1900, 1901, 1902, 1903),
        countries=("usa", "gbr"),
        values=np.array([[100.0, 200.0], [110.0, 210.0], [99.0, 220.5], [108.9, 231.525]]),
    )


@pytest.fixture(scope="session")
def replication_csv():
    path = os.environ.get(REPLICATION_ENV)
    if not path:
        pytest.skip(f"set {REPLICATION_ENV} to a spliced Maddison+IMF level panel")
    return Path(path)
