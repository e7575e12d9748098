# Repository root conftest: puts the flat top-level packages on sys.path
# for the test suite and holds the fixtures shared between test modules.
import numpy as np
import pytest

from geometry.solids import Tube

@pytest.fixture
def z_tube():
    """Unit z axis tube of radius 2^-4 through the origin."""
    return Tube([0.0, 0.0, 0.0], [0.0, 0.0, 1.0], 2.0 ** -4)

@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(20240601))
