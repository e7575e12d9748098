"""Seeded random generators.

Every random draw in the lab goes through a numpy PCG64 bit generator so an
experiment replays bit for bit on any platform given the same seed.
"""

import numpy as np
from scipy.spatial.transform import Rotation

ALGORITHM = "numpy.random.PCG64"

def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))

def spawn(seed: int, n: int):
    """Independent child generators derived from one seed."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.PCG64(child)) for child in children]

def random_rotation(rng: np.random.Generator) -> np.ndarray:
    return Rotation.random(random_state=rng).as_matrix()
