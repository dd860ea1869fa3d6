"""
Shared fixtures for the test suite.
"""
import numpy as np
import pytest

from ttw.models import PotentialParams


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def isotropic() -> PotentialParams:
    return PotentialParams(omega=1.0, alpha=0.0, beta=0.0, k=1)


@pytest.fixture
def barriers() -> PotentialParams:
    # p_phi = 3/2, p_psi = 1
    return PotentialParams(omega=1.0, alpha=2.0, beta=0.75, k="3/2")


@pytest.fixture
def wedge() -> PotentialParams:
    return PotentialParams(omega=1.0, alpha=1.0, beta=0.5, k=1)
