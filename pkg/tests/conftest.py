import numpy as np
import pytest

from hhwalk.graphs import (
    UniverseGraph,
    expand_household,
    sample_poisson_degrees,
    sample_universe_configuration_model,
)

ACCEPTANCE_LINES = []


def poisson_household(n, lam, seed, templates="clique"):
    rng = np.random.default_rng(seed)
    d = sample_poisson_degrees(n, lam, rng)
    u = sample_universe_configuration_model(d, rng)
    return expand_household(u, templates)


@pytest.fixture
def k4_universe():
    return UniverseGraph.from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])


@pytest.fixture
def k4_household(k4_universe):
    return expand_household(k4_universe)


@pytest.fixture
def mixed_household():
    # universe degrees (3, 3, 2, 2, 2): two C3 and three C2 communities
    u = UniverseGraph.from_edges(5, [(0, 1), (0, 2), (0, 3), (1, 3), (1, 4), (2, 4)])
    return expand_household(u)


@pytest.fixture(scope="session")
def household30():
    return poisson_household(30, 4.0, seed=7)


@pytest.fixture(scope="session")
def acceptance_report():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
