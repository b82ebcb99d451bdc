"""Random mode pairs and amplitude vectors for property tests"""

import numpy as np

from app.dynamics.densities import ModePair
from app.trap.grid import Grid


def random_orthonormal_modes(grid: Grid, rng: np.random.Generator) -> ModePair:
    """Two complex random fields vanishing on the walls, orthonormal on the grid"""
    n_free = len(grid.free_indices)
    vectors = rng.normal(size=(2, n_free)) + 1j * rng.normal(size=(2, n_free))
    q, _ = np.linalg.qr(vectors.T)
    phi = grid.embed(q.T) / np.sqrt(grid.weight)
    return ModePair(grid=grid, phi=phi)


def random_amplitudes(n_bosons: int, rng: np.random.Generator) -> np.ndarray:
    b = rng.normal(size=n_bosons + 1) + 1j * rng.normal(size=n_bosons + 1)
    return b / np.linalg.norm(b)
