import numpy as np
import pytest

from bufp.game import load_game


@pytest.fixture(scope="session")
def kuhn():
    return load_game("kuhn")


@pytest.fixture(scope="session")
def leduc():
    return load_game("leduc")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one pass/fail line per acceptance criterion."""
    log = request.config.stash.setdefault(_LOG_KEY, [])
    return log


_LOG_KEY = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LOG_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line)
