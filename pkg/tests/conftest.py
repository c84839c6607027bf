import numpy as np
import pytest
from hypothesis import settings

from otflow.energy import EnergySpec
from otflow.geometry import PeriodicDensity, sine_density

settings.register_profile("default", deadline=None, max_examples=25)
settings.load_profile("default")

ALL_FAMILIES = [
    EnergySpec("dirichlet"),
    EnergySpec("hk", 2),
    EnergySpec("power", 0.5),
    EnergySpec("power", 2.0),
    EnergySpec("fisher"),
    EnergySpec("log"),
    EnergySpec("perturbed", 0.1),
]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def sine():
    return sine_density(256, 0.5, 1)


@pytest.fixture
def uniform():
    return PeriodicDensity.uniform(256)


VERDICTS = {}


@pytest.fixture
def verdict():
    """Record one pass/fail line per acceptance criterion."""

    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        VERDICTS[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[number])
