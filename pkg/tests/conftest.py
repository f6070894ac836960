import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from bachlike.fields import PointContext  # noqa: E402
from bachlike.geometry import RandomMetricSpec, catalog_get, random_metric, sample_points  # noqa: E402

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", deadline=None, max_examples=15, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

CRITERIA: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def rand4():
    return random_metric(RandomMetricSpec(seed=7, epsilon=0.05))


@pytest.fixture(scope="session")
def rand5():
    return random_metric(RandomMetricSpec(seed=7, epsilon=0.05, dim=5))


@pytest.fixture(scope="session")
def rand_ctx(rand4):
    return PointContext(rand4, sample_points(rand4, 12, seed=3), 5)


@pytest.fixture(scope="session")
def catalog():
    return {name: catalog_get(name) for name in ("E4", "GAUSS", "S4", "CYL")}


def rng(seed=0):
    return np.random.default_rng(seed)
