import numpy as np
import pytest

SIGMA5 = np.array(
    [
        [1.0, 0.9, 0.6, 0.8, 0.7],
        [0.9, 1.0, 0.5, 0.6, 0.6],
        [0.6, 0.5, 1.0, 0.4, 0.1],
        [0.8, 0.6, 0.4, 1.0, 0.8],
        [0.7, 0.6, 0.1, 0.8, 1.0],
    ]
)


def random_corr(rng, n, dof=None):
    """Correlation of a Wishart draw with ``dof`` degrees of freedom."""
    dof = dof or 2 * n
    x = rng.standard_normal((dof, n))
    c = x.T @ x
    d = np.sqrt(np.diag(c))
    r = c / np.outer(d, d)
    r = 0.5 * (r + r.T)
    np.fill_diagonal(r, 1.0)
    return r


def random_spd(rng, n):
    x = rng.standard_normal((n, n))
    return x @ x.T + n * 0.1 * np.eye(n)


@pytest.fixture
def sigma5():
    return SIGMA5.copy()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = []


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE:
        terminalreporter.write_line(line)
