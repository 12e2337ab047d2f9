import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from darklattice.lattice import CIRCULAR, build_square_lattice

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture(scope="session")
def lat21():
    return build_square_lattice(21, 21, 0.3, CIRCULAR)


@pytest.fixture(scope="session")
def lat9():
    return build_square_lattice(9, 9, 0.3, CIRCULAR)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
