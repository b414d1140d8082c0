import numpy as np
import pytest

from thermostat_lab._backend import HAVE_NUMBA

BACKENDS = ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]


@pytest.fixture(params=BACKENDS)
def which(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


CRITERIA_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[CRITERIA_KEY] = []


@pytest.fixture
def criterion(request):
    """Record and print one verdict line per acceptance criterion."""
    config = request.config
    reporter = config.pluginmanager.get_plugin("terminalreporter")

    def emit(number: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        config.stash[CRITERIA_KEY].append(line)
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(CRITERIA_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
