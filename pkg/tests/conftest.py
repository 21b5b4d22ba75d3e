import numpy as np
import pytest

from robust_imrt.config import parse_config
from robust_imrt.evaluation import ClinicalGoals
from robust_imrt.motion import make_states, make_uncertainty_set, validate_pdf
from robust_imrt.phantom import BeamletSet, build_phantom, dose_influence, normalize_influence

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def states():
    return make_states()


@pytest.fixture(scope="session")
def nominal(states):
    return validate_pdf([0.1, 0.2, 0.4, 0.2, 0.1], states)


@pytest.fixture(scope="session")
def robust_set(nominal):
    return make_uncertainty_set(nominal, [0.1] * 5, [0.1] * 5)


@pytest.fixture(scope="session")
def goals():
    return ClinicalGoals()


@pytest.fixture(scope="session")
def small_phantom():
    return build_phantom(16, 16, 3.0)


@pytest.fixture(scope="session")
def small_influence(small_phantom, states):
    beams = BeamletSet(beamlets_per_angle=6, beamlet_width_mm=5.0)
    return dose_influence(small_phantom, beams, states)


@pytest.fixture(scope="session")
def phantom64():
    return build_phantom(64, 64, 3.0)


@pytest.fixture(scope="session")
def influence64(phantom64, states, nominal):
    return normalize_influence(dose_influence(phantom64, BeamletSet(), states), phantom64, nominal)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def quick_config():
    """Default planning setup with a short shared budget."""
    return parse_config("optimizer:\n  max_iterations: 40\n  seed: 7\n")
