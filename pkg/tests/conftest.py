import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from brownrecoil.fields import DiffusionParams, Grid

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("default")

_ACCEPTANCE = []


def record_acceptance(number, passed, detail):
    """Collect one line per acceptance criterion; printed in the terminal summary."""
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    _ACCEPTANCE.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)


@pytest.fixture
def grid():
    return Grid(-20.0, 20.0, 1024)


@pytest.fixture
def params():
    return DiffusionParams(0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
