import numpy as np
import pytest

from cxtomo.geometry import get_family
from cxtomo.phantoms import load_phantom

# filled by test_acceptance.record(); echoed at the end of the pytest run
ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def lines():
    return get_family("euclidean-lines")


@pytest.fixture(scope="session")
def hyperbolic():
    return get_family("hyperbolic-geodesics")


@pytest.fixture(scope="session", params=["euclidean-lines", "hyperbolic-geodesics"])
def family(request):
    return get_family(request.param)


@pytest.fixture(scope="session")
def gaussian():
    return load_phantom("gaussian")


@pytest.fixture(scope="session")
def mollifier():
    return load_phantom("mollifier")


def random_disc(rng, n, rmax=0.9):
    return rmax * np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
