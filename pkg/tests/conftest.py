import math
import sys

import numpy as np
import pytest

from impulse_heat.configio import example_config
from impulse_heat.oracle import random_instance
from impulse_heat.spectral import Domain, RegionOperator, build_basis
from impulse_heat.system import ImpulseSchedule, ProblemConfig

LN2, LN4, LN6 = math.log(2), math.log(4), math.log(6)
SEEDS = range(20)


@pytest.fixture(scope="session")
def example():
    return example_config()


@pytest.fixture(scope="session")
def instances():
    return [random_instance(seed) for seed in SEEDS]


def c1_config(y0=(5.0, 10.0), r=0.05):
    """Two modes; the first impulse only reaches mode 1, the second reaches everything."""
    basis = build_basis(Domain.interval(), 2)
    sched = ImpulseSchedule(
        [0.1, 0.3], (RegionOperator(None, np.diag([1.0, 0.0])), RegionOperator(None, np.eye(2)))
    )
    return ProblemConfig(basis, sched, np.array(y0), r)


@pytest.fixture
def c1():
    return c1_config()


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    RESULTS = getattr(module, "RESULTS", None)
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])
