from dataclasses import replace

import numpy as np
import pytest

from app.core.errors import NumericalError
from app.trap.eigenmodes import (
    gaussian_orbital,
    ho_localized_modes,
    lowest_eigenpairs,
    single_particle_hamiltonian,
    single_particle_modes,
)
from app.trap.potential import Ramp, potential_on_grid


def test_harmonic_levels(line_grid, harmonic_trap):
    eigen = single_particle_modes(harmonic_trap, line_grid, 0.0, 3)
    assert eigen.count == 3
    assert eigen.energies[0] == pytest.approx(0.5, abs=1e-3)
    assert eigen.energies[1] == pytest.approx(1.5, abs=5e-3)
    assert eigen.energies[2] == pytest.approx(2.5, abs=1e-2)


def test_modes_orthonormal_and_oriented(line_grid, harmonic_trap):
    modes = single_particle_modes(harmonic_trap, line_grid, 0.0).modes
    gram = np.array([[line_grid.inner(a, b) for b in modes] for a in modes])
    assert np.allclose(gram, np.eye(2), atol=1e-10)
    ground = modes[0].ravel()
    assert ground[np.argmax(np.abs(ground))] > 0


def test_double_well_doublet(line_grid, double_well):
    energies = single_particle_modes(double_well, line_grid, 0.0).energies
    # tunnel-split doublet lies far below the harmonic spacing
    assert 0 < energies[1] - energies[0] < 0.2


def test_sparse_path_matches_dense(mocker, line_grid, double_well):
    dense = single_particle_modes(double_well, line_grid, 0.0)
    mocker.patch("app.trap.eigenmodes.DENSE_LIMIT", 10)
    sparse = single_particle_modes(double_well, line_grid, 0.0)
    assert np.allclose(sparse.energies, dense.energies, atol=1e-9)
    for a, b in zip(sparse.modes, dense.modes):
        assert abs(line_grid.inner(a, b)) == pytest.approx(1.0, abs=1e-8)


def test_too_many_pairs(small_grid, harmonic_trap):
    hamiltonian = single_particle_hamiltonian(small_grid, potential_on_grid(harmonic_trap, small_grid, 0.0))
    with pytest.raises(NumericalError):
        lowest_eigenpairs(hamiltonian, hamiltonian.shape[0])


def test_count_below_two(line_grid, harmonic_trap):
    with pytest.raises(ValueError):
        single_particle_modes(harmonic_trap, line_grid, 0.0, count=1)


def test_gaussian_orbitals(line_grid, harmonic_trap):
    orbital = gaussian_orbital(line_grid, 1.0)
    assert line_grid.norm(orbital) == pytest.approx(1.0, abs=1e-10)
    left, right = ho_localized_modes(harmonic_trap, line_grid, 1.5)
    assert line_grid.inner(left, right).real == pytest.approx(np.exp(-(1.5**2)), rel=1e-8)
    with pytest.raises(ValueError):
        ho_localized_modes(harmonic_trap, line_grid, -1.0)


@pytest.mark.parametrize("tilt", [0.05, 0.1])
def test_tilted_double_well_localizes(line_grid, double_well, tilt):
    trap = replace(double_well, tilt=Ramp.constant(tilt))
    modes = single_particle_modes(trap, line_grid, 0.0).modes
    _, _, z = line_grid.mesh
    left = line_grid.integrate(np.abs(modes[0]) ** 2 * (z < 0))
    right = line_grid.integrate(np.abs(modes[1]) ** 2 * (z > 0))
    assert left >= 0.95
    assert right >= 0.95
