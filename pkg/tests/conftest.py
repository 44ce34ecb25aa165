import mpmath
import pytest

from heatflow import constants
from heatflow.zeros import load_zero_table


@pytest.fixture(scope="session")
def table():
    return load_zero_table()


@pytest.fixture(scope="session")
def consts():
    return constants.load()


@pytest.fixture(autouse=True)
def _mp_precision():
    # reference values are computed at 30 digits unless a test asks for more
    with mpmath.workdps(30):
        yield


ACCEPTANCE = {}


def record(n, ok, detail):
    """Store the outcome of acceptance criterion n; printed at the end of the run."""
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[n] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
