import numpy as np
import pytest

from exchopt.experiments import reference_case_model
from exchopt.simulation import McConfig


@pytest.fixture(scope="session")
def case1_model():
    return reference_case_model(1)


@pytest.fixture(scope="session")
def case2_model():
    return reference_case_model(2)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240516)


@pytest.fixture()
def fast_mc():
    """Small but CV-assisted config for module-level simulation checks."""
    return McConfig(n_paths=40_000, n_steps=2000, seed=7)
