"""
Single-particle eigenmodes and harmonic-oscillator localized states
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh

from app.core.errors import NumericalError
from app.core.logging import LatencyLogger, get_logger
from app.trap.grid import Grid
from app.trap.potential import TrapSpec, potential_on_grid

logger = get_logger(__name__)

# Free-point count up to which eigenproblems are solved densely
DENSE_LIMIT = 3000


@dataclass(frozen=True)
class EigenModes:
    energies: np.ndarray
    modes: np.ndarray  # (count, nx, ny, nz), unit norm on the grid

    @property
    def count(self) -> int:
        return len(self.energies)


def single_particle_hamiltonian(grid: Grid, v_field: np.ndarray) -> sp.csr_matrix:
    """-1/2 Laplacian + V on the free grid points"""
    grid.check_field(v_field, "potential")
    return (grid.kinetic + sp.diags(grid.restrict(v_field))).tocsr()


def _orient(vectors: np.ndarray) -> np.ndarray:
    """Fix the sign of each column so its largest-magnitude entry is positive"""
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])].real)
    signs[signs == 0] = 1.0
    return vectors * signs


def lowest_eigenpairs(
    hamiltonian: sp.spmatrix,
    count: int,
    shift: Optional[float] = None,
    seed: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Lowest `count` eigenpairs of a Hermitian operator, ascending; eigenvectors as columns.

    Dense below DENSE_LIMIT, otherwise shift-invert Lanczos around `shift`
    (a value below the spectrum).
    """
    n = hamiltonian.shape[0]
    if count >= n:
        raise NumericalError(
            "More eigenpairs requested than grid points", details={"count": count, "points": n}
        )
    try:
        if n <= DENSE_LIMIT:
            matrix = hamiltonian.toarray() if sp.issparse(hamiltonian) else hamiltonian
            energies, vectors = scipy.linalg.eigh(matrix, subset_by_index=[0, count - 1])
        else:
            sigma = shift if shift is not None else float(hamiltonian.diagonal().min()) - 1.0
            v0 = None if seed is None else np.real(seed)
            energies, vectors = eigsh(hamiltonian, k=count, sigma=sigma, which="LM", v0=v0)
            order = np.argsort(energies)
            energies, vectors = energies[order], vectors[:, order]
    except (ArpackNoConvergence, ArpackError, np.linalg.LinAlgError) as exc:
        raise NumericalError(
            "Eigensolve did not converge", details={"count": count, "points": n, "error": str(exc)}
        ) from exc
    if not np.all(np.isfinite(energies)):
        raise NumericalError("Eigensolve returned non-finite values", details={"points": n})
    return energies, _orient(vectors)


def single_particle_modes(spec: TrapSpec, grid: Grid, t: float, count: int = 2) -> EigenModes:
    """Lowest eigenpairs of -1/2 Laplacian + V(., t) by finite differences"""
    if count < 2:
        raise ValueError("count must be at least 2")
    v_field = potential_on_grid(spec, grid, t)
    hamiltonian = single_particle_hamiltonian(grid, v_field)
    with LatencyLogger("trap.eigensolve", logger, points=hamiltonian.shape[0], count=count):
        energies, vectors = lowest_eigenpairs(hamiltonian, count, shift=float(v_field.min()) - 1.0)
    modes = grid.embed(vectors.T) / np.sqrt(grid.weight)
    return EigenModes(energies=energies, modes=modes)


def gaussian_orbital(grid: Grid, center: float) -> np.ndarray:
    """Oscillator ground state of unit width centred at z = center, on the active axes"""
    x, y, z = grid.mesh
    profile = np.exp(-((z - center) ** 2) / 2) * np.exp(-(x**2 + y**2) / 2)
    norm = np.pi ** (-0.25 * len(grid.active_axes))
    return norm * profile * grid.free_mask


def ho_localized_modes(spec: TrapSpec, grid: Grid, d: float) -> Tuple[np.ndarray, np.ndarray]:
    """(phi_L, phi_R): unit-width Gaussians centred at -d and +d along z"""
    if d < 0:
        raise ValueError("half separation must be non-negative")
    return gaussian_orbital(grid, -d), gaussian_orbital(grid, d)
