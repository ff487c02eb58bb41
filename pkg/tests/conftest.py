import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from einselect.spinbath import ModelSpec, QubitAmplitudes, env_random

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", max_examples=400, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


def random_system(rng: np.random.Generator) -> QubitAmplitudes:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    v /= np.linalg.norm(v)
    return QubitAmplitudes(v[0], v[1])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def decohered_model():
    """N = 50, |a|^2 = 0.7."""
    return ModelSpec(QubitAmplitudes(np.sqrt(0.7), np.sqrt(0.3)), env_random(50, 4))
