import numpy as np
import pytest

from thermodamage.grid import build_mesh


@pytest.fixture
def mesh1d():
    return build_mesh(1, 1.0, 8)


@pytest.fixture
def mesh2d():
    return build_mesh(2, [1.0, 1.0], [4, 4])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance_lines(request):
    return request.config.stash[_ACCEPTANCE]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
