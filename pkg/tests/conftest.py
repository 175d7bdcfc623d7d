import functools
import math

import numpy as np
import pytest

from dodstab.mesh import RampGeometry, build_mesh
from dodstab.studies import discretization


@functools.lru_cache(maxsize=None)
def cached_mesh(N, gamma_deg=45.0, x0=0.2001):
    return build_mesh(N, RampGeometry.from_degrees(gamma_deg, x0))


@functools.lru_cache(maxsize=None)
def cached_disc_dt(N, p, gamma_deg=45.0, x0=0.2001):
    return discretization(N, p, gamma_deg, x0)


def cached_disc(N, p, gamma_deg=45.0, x0=0.2001):
    # shared instances: tests must not change eta or the boundary data for good
    return cached_disc_dt(N, p, gamma_deg, x0)[0]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def beta45():
    return np.array([math.sqrt(2.0), math.sqrt(2.0)])


# one PASS/FAIL line per acceptance criterion, printed after the test run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
