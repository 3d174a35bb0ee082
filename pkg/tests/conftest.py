import math

import pytest

from kgmsoliton import ModelConfig, Potential, solve_gauged, solve_qball

SQRT_HALF = math.sqrt(0.5)


@pytest.fixture(scope="session")
def log_model():
    return ModelConfig(1.0, 0.0, 0.0, Potential.logarithmic(1.0, 1.0))


@pytest.fixture(scope="session")
def quartic_model():
    return ModelConfig(SQRT_HALF, 0.0, 0.0, Potential.quartic(1.0, 1.0))


@pytest.fixture(scope="session")
def power_model():
    return ModelConfig(0.5, 1.0, 0.0, Potential.power_law(-1.0, 4.0))


@pytest.fixture(scope="session")
def gaussian_profile(log_model):
    return solve_qball(log_model)


@pytest.fixture(scope="session")
def quartic_profile(quartic_model):
    return solve_qball(quartic_model)


@pytest.fixture(scope="session")
def power_profile(power_model):
    return solve_qball(power_model)


@pytest.fixture(scope="session")
def gauged_profile(quartic_model, quartic_profile):
    return solve_gauged(quartic_model.replace(e=0.1), seed=quartic_profile)


@pytest.fixture(scope="session")
def gauged_power_profile(power_model, power_profile):
    return solve_gauged(power_model.replace(e=0.2), seed=power_profile)
