import pytest

from ultraiso.scalars import FiniteField, PadicField
from ultraiso.spaces import Space

ACCEPTANCE_LINES: list[str] = []


def finite(q, *weights):
    return Space(FiniteField(q), weights)


def padic(p=3, dim=2, precision=4, window=(-6, 6), weights=None):
    return Space(PadicField(p, precision, window), weights or [1] * dim)


@pytest.fixture(scope="session")
def q3sq():
    return padic()


@pytest.fixture(scope="session")
def f3_13():
    return finite(3, 1, 3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
