import numpy as np
import pytest

from ris_zf.checks import random_realization

_REPORT: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def make_real(rng):
    def _make(n_bs=6, n_ris=12, n_users=4):
        return random_realization(rng, n_bs, n_ris, n_users)

    return _make


@pytest.fixture(scope="session")
def report():
    """Collects one line per acceptance criterion for the terminal summary."""
    return _REPORT


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)


def cn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_hermitian(rng, n):
    a = cn(rng, n, n)
    return a + a.conj().T
