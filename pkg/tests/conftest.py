import numpy as np
import pytest

from oecs import analytic_flow

# acceptance results collected for the terminal summary
ACCEPTANCE = {}


def record(number, ok, detail="", status=None):
    status = status or ("PASS" if ok else "FAIL")
    line = f"criterion {number:>2}: {status}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])


@pytest.fixture(scope="session")
def cellular():
    return analytic_flow("cellular")


@pytest.fixture(scope="session")
def saddle():
    return analytic_flow("steady_saddle")


@pytest.fixture(scope="session")
def rotation():
    return analytic_flow("rigid_rotation")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
