import numpy as np
import pytest

from lyapgap.hyperbolic import build_bolza_surface, fenchel_nielsen_twist
from lyapgap.representation import symmetric_power

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def surface():
    return build_bolza_surface()


@pytest.fixture(scope="session")
def jx(surface):
    return surface.fuchsian()


@pytest.fixture(scope="session")
def jy(surface):
    return fenchel_nielsen_twist(surface, 0.5)


@pytest.fixture(scope="session")
def sym2(jx):
    return symmetric_power(jx, 3)


@pytest.fixture(scope="session")
def sym2y(jy):
    return symmetric_power(jy, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def table12(surface):
    from lyapgap.thermo import enumerate_closed_geodesics

    return enumerate_closed_geodesics(surface, 12.0)
