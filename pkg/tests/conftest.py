import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def orthogonal_4x2():
    # two orthogonal columns of squared norm 4, so (1/p) X'X = I_2
    return np.array([[1.0, 1.0], [1.0, -1.0], [1.0, 1.0], [1.0, -1.0]])


@pytest.fixture
def spectrum_6x3():
    # (1/p) X'X = diag(0.5, 1, 1.5) with p = 6
    X = np.zeros((6, 3))
    X[0, 0] = np.sqrt(3.0)
    X[1, 1] = np.sqrt(6.0)
    X[2, 2] = 3.0
    return X


def pytest_configure(config):
    config._criteria = {}


@pytest.fixture
def record_criterion(request):
    """Record ``(number, title, passed, details)`` for the end-of-run summary."""

    def record(number, title, passed, details=()):
        request.config._criteria[number] = (title, bool(passed), list(details))
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    criteria = getattr(config, "_criteria", {})
    if not criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(criteria):
        title, passed, details = criteria[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}")
        for line in details:
            terminalreporter.write_line(f"    {line}")
