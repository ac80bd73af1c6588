import numpy as np
import pytest
from hypothesis import settings

from monolev import measure as ms
from monolev import semigroup as sg

settings.register_profile("default", max_examples=30, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def arcsine():
    return ms.arcsine(1.0)


@pytest.fixture(scope="session")
def bernoulli():
    return ms.bernoulli()


@pytest.fixture(scope="session")
def pairs():
    return {"brownian": sg.brownian_pair(), "drift": sg.drift_pair(0.7),
            "poisson": sg.poisson_pair(1.0)}


# acceptance verdicts, echoed in the terminal summary
_ACCEPTANCE = []


@pytest.fixture
def record():
    def rec(k, passed, value, tol, note=""):
        line = f"ACCEPTANCE {k}: {'PASS' if passed else 'FAIL'} {value} vs {tol}{note}"
        _ACCEPTANCE.append((k, line))
        print(line)
        return passed
    return rec


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
