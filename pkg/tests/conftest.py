import numpy as np
import pytest

from deltaprime.design import design_for, interaction_of
from deltaprime.pair import sine_lattice_pair, sine_pair

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def sine():
    return sine_pair(4001)


@pytest.fixture(scope="session")
def sine_fine():
    return sine_pair(8001)


@pytest.fixture(scope="session")
def lattice():
    return sine_lattice_pair(129)


@pytest.fixture(scope="session")
def lattice_design(lattice):
    q = design_for(lattice, 2.0, 1.0)
    return q, interaction_of(lattice, q)


@pytest.fixture(scope="session")
def lattice_classic(lattice):
    q = design_for(lattice, 1.0, 1.0)
    return q, interaction_of(lattice, q)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
