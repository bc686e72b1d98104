import numpy as np
import pytest

from region_mixup import RngState
from region_mixup.data import one_hot

_criteria = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, text): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "BLOCKED"}[report.outcome]
        _criteria.append((marker.args[0], status, marker.args[1]))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num, status, text in sorted(_criteria):
        terminalreporter.write_line(f"[{status:7s}] C{num:<2d} {text}")


@pytest.fixture
def rng():
    return RngState(20240229)


def random_batch(rng, n=4, c=3, h=8, w=8, classes=5, dtype=np.float32):
    x = rng.uniform((n, c, h, w)).astype(dtype)
    labels = rng.integers(classes, size=n)
    return x, one_hot(labels, classes, dtype)
