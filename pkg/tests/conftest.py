import numpy as np
import pytest
from hypothesis import settings

from quadricflow.model import validate_params

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# Gentle barrier strengths: keep the stiffest c/x^4 terms small enough for
# h = 1e-3 RK4 to hold every family to 1e-8 over ten time units.
WEIGHTS = np.array([1.0, 1.5, 1.2])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def p3():
    return validate_params({"a": [1.0, 2.0, 3.0], "r": 1.0})


@pytest.fixture
def p3c():
    a = np.array([1.0, 2.0, 3.0])
    return validate_params({"a": a, "r": 1.0, "c": 0.05 * WEIGHTS, "d": 0.05 * WEIGHTS / a})


@pytest.fixture
def p41():
    """The b = (4, 1) ellipse used by the worked examples."""
    return validate_params({"b": [4.0, 1.0], "r": 1.0})


@pytest.fixture
def p12():
    return validate_params({"a": [1.0, 2.0], "r": 1.0})


def pytest_terminal_summary(terminalreporter):
    import sys

    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance") and getattr(mod, "LINES", None):
            terminalreporter.section("acceptance criteria")
            for line in mod.LINES:
                terminalreporter.write_line(line)
