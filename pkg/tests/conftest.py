import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from diracnls.core import PeriodicPotential, TorusGrid  # noqa: E402
from diracnls.diracpoint import dirac_point  # noqa: E402
from diracnls.nld import NLDParams, SpinorField  # noqa: E402

V25 = PeriodicPotential({2: 5.0})
FREE = PeriodicPotential({})


@pytest.fixture(scope="session")
def dp25():
    return dirac_point(V25)


@pytest.fixture(scope="session")
def dp_free():
    return dirac_point(FREE)


@pytest.fixture(scope="session")
def env_grid():
    return TorusGrid(32, 256)


@pytest.fixture(scope="session")
def spinor(env_grid):
    return SpinorField.gaussian(env_grid, 1.0, 0.5, 1.0)


@pytest.fixture(scope="session")
def nldp(dp25):
    return NLDParams.from_dirac(dp25, kappa=1.0)


ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
