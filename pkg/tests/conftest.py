import numpy as np
import pytest

from freev.config import SpectralConfig
from freev.fixtures import FixtureKind, FixtureSpec, make_fixture
from freev.melbank import build_filterbank


@pytest.fixture(scope="session")
def cfg():
    return SpectralConfig()


@pytest.fixture(scope="session")
def fb():
    return build_filterbank()


@pytest.fixture(scope="session")
def voice():
    return make_fixture(FixtureSpec(FixtureKind.HARMONIC_VOICE, 2.0, seed=3))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
