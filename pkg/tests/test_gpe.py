import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from app.core.errors import ConvergenceError, NumericalError
from app.dynamics.amplitudes import AmplitudeVector, basis_state, binomial_state, initial_state
from app.dynamics.densities import ModePair
from app.dynamics.gpe import (
    GPESolver,
    align_phases,
    chemical_potential,
    coupling_weights,
    energy,
    solve_modes,
)
from app.trap.eigenmodes import single_particle_modes
from app.trap.grid import Grid
from app.trap.potential import TrapSpec, potential_on_grid
from tests.helpers import random_amplitudes


def imaginary_time_ground_state(grid: Grid, v_field: np.ndarray, coupling: float) -> float:
    """Backward-Euler imaginary-time single-mode GPE; returns the chemical potential"""
    kinetic, w = grid.kinetic, grid.weight
    v = grid.restrict(v_field)
    z = grid.restrict(grid.mesh[2])
    phi = np.exp(-(z**2) / 2)
    phi /= np.sqrt(w * phi @ phi)
    identity = sp.identity(len(phi), format="csc")
    dtau = 0.5
    for _ in range(5000):
        operator = identity + dtau * (kinetic + sp.diags(v + coupling * phi**2))
        new = spsolve(operator.tocsc(), phi)
        new /= np.sqrt(w * new @ new)
        converged = np.abs(new - phi).max() < 1e-12
        phi = new
        if converged:
            break
    applied = kinetic @ phi + v * phi
    return float(w * phi @ applied + coupling * w * np.sum(phi**4))


def wide_seed(grid: Grid) -> np.ndarray:
    """Gaussian and odd Gaussian a little wider than the oscillator states"""
    _, _, z = grid.mesh
    envelope = np.exp(-(z**2) / 2.88) * grid.free_mask
    return np.stack([envelope, z * envelope]).astype(np.complex128)


class TestWeights:
    def test_trace_is_boson_number(self, rng):
        weights = coupling_weights(AmplitudeVector(random_amplitudes(6, rng)))
        assert np.trace(weights.X).real == pytest.approx(6.0)
        assert np.allclose(weights.X, weights.X.conj().T)

    def test_initial_weights(self):
        weights = coupling_weights(initial_state(8))
        assert np.allclose(weights.X, np.diag([8, 0]))
        assert weights.Y[0, 0, 0, 0] == pytest.approx(56.0)
        assert np.count_nonzero(np.abs(weights.Y) > 1e-14) == 1

    def test_binomial_weights_are_rank_one(self):
        weights = coupling_weights(binomial_state(10, np.pi / 3, 0.4))
        eigenvalues = np.linalg.eigvalsh(weights.X)
        assert eigenvalues[0] == pytest.approx(0.0, abs=1e-10)
        assert eigenvalues[1] == pytest.approx(10.0)


class TestDegeneratePath:
    def test_noninteracting_ground_state(self):
        grid = Grid.line(1000, 10.0)
        v = potential_on_grid(TrapSpec(), grid, 0.0)
        modes, mu = solve_modes(coupling_weights(initial_state(8)), grid, v, 0.0, wide_seed(grid))
        assert mu.mu[0, 0].real == pytest.approx(0.5, abs=2e-3)
        assert chemical_potential(mu) == pytest.approx(mu.mu[0, 0].real)
        assert modes.orthonormality_error() < 1e-10

    def test_unoccupied_mode_is_first_excited(self, line_grid, harmonic_trap):
        v = potential_on_grid(harmonic_trap, line_grid, 0.0)
        solver = GPESolver(line_grid, v, 0.0)
        solution = solver.solve(coupling_weights(initial_state(4)), wide_seed(line_grid))
        assert solution.path == "degenerate"
        excited = single_particle_modes(harmonic_trap, line_grid, 0.0).modes[1]
        assert abs(line_grid.inner(excited, solution.phi[1])) == pytest.approx(1.0, abs=1e-8)

    def test_interacting_matches_imaginary_time(self, line_grid, harmonic_trap):
        n_bosons, g = 8, 0.5
        v = potential_on_grid(harmonic_trap, line_grid, 0.0)
        solver = GPESolver(line_grid, v, g, tol=1e-10)
        solution = solver.solve(coupling_weights(initial_state(n_bosons)), wide_seed(line_grid))
        expected = imaginary_time_ground_state(line_grid, v, g * (n_bosons - 1))
        assert solution.mu.mu[0, 0].real == pytest.approx(expected, rel=1e-6)
        assert solution.residual < 1e-10

    def test_sparse_orthogonal_solve(self, mocker, line_grid, harmonic_trap):
        v = potential_on_grid(harmonic_trap, line_grid, 0.0)
        weights = coupling_weights(initial_state(4))
        dense = GPESolver(line_grid, v, 0.0).solve(weights, wide_seed(line_grid))
        mocker.patch("app.dynamics.gpe.DENSE_LIMIT", 10)
        sparse = GPESolver(line_grid, v, 0.0).solve(weights, wide_seed(line_grid))
        assert abs(line_grid.inner(dense.phi[1], sparse.phi[1])) == pytest.approx(1.0, abs=1e-6)


def coherent_state(n_bosons: int, epsilon: float) -> AmplitudeVector:
    """All atoms in mode 1 plus a small admixture of one atom in mode 2"""
    b = np.zeros(n_bosons + 1, dtype=np.complex128)
    b[0], b[1] = 1.0, epsilon
    return AmplitudeVector(b / np.linalg.norm(b))


def out_of_span_residual(solver: GPESolver, weights, phi: np.ndarray) -> float:
    """max_i ||R_i - sum_j <phi_j|R_i> phi_j|| on the grid"""
    rows = solver.grid.restrict(phi)
    r = solver.rhs(weights, rows)
    worst = 0.0
    for i in range(2):
        leftover = r[i] - sum(solver.w * np.vdot(rows[j], r[i]) * rows[j] for j in range(2))
        worst = max(worst, float(np.sqrt(solver.w * np.vdot(leftover, leftover).real)))
    return worst


class TestLinearPath:
    @pytest.fixture
    def rotated_seed(self, harmonic_modes):
        phi = harmonic_modes.phi
        c, s = np.cos(0.3), np.sin(0.3)
        return np.stack([c * phi[0] + s * phi[1], -s * phi[0] + c * phi[1]])

    def test_fragmented_ground_state(self, line_grid, harmonic_trap, harmonic_modes):
        v = potential_on_grid(harmonic_trap, line_grid, 0.0)
        weights = coupling_weights(basis_state(8, -2))
        solution = GPESolver(line_grid, v, 0.0).solve(weights, harmonic_modes.phi)
        assert solution.path == "linear"
        levels = single_particle_modes(harmonic_trap, line_grid, 0.0).energies
        modes = solve_modes(weights, line_grid, v, 0.0, harmonic_modes.phi)[0]
        assert energy(weights, modes, v, 0.0) == pytest.approx(6 * levels[0] + 2 * levels[1], abs=1e-6)
        assert energy(weights, modes, v, 0.0) == pytest.approx(6.0, abs=1e-2)
        assert solution.mu.trace == pytest.approx(0.75, abs=2e-3)
        assert np.allclose(solution.mu.mu, solution.mu.mu.conj().T)

    def test_frame_follows_reference(self, line_grid, harmonic_trap, rotated_seed):
        v = potential_on_grid(harmonic_trap, line_grid, 0.0)
        weights = coupling_weights(basis_state(8, -2))
        solution = GPESolver(line_grid, v, 0.0).solve(weights, rotated_seed)
        assert solution.iterations == 0
        assert solution.residual < 1e-8
        for i in range(2):
            overlap = line_grid.inner(rotated_seed[i], solution.phi[i])
            assert overlap.real == pytest.approx(1.0, abs=1e-6)


class TestCoupledPath:
    @pytest.mark.parametrize(
        "epsilon, g, path",
        [(0.1, 0.0, "linear"), (1e-3, 0.1, "coupled")],
    )
    def test_coherent_amplitudes(self, line_grid, harmonic_trap, harmonic_modes, epsilon, g, path):
        v = potential_on_grid(harmonic_trap, line_grid, 0.0)
        weights = coupling_weights(coherent_state(8, epsilon))
        assert abs(weights.X[0, 1]) > 0
        solver = GPESolver(line_grid, v, g)
        solution = solver.solve(weights, harmonic_modes.phi)
        assert solution.path == path
        assert solution.residual < solver.tol
        modes = ModePair(grid=line_grid, phi=solution.phi)
        assert modes.orthonormality_error() < 1e-10
        assert np.allclose(solution.mu.mu, solution.mu.mu.conj().T)
        assert energy(weights, modes, v, g) <= energy(weights, harmonic_modes, v, g) + 1e-12

    def test_random_amplitudes(self, line_grid, harmonic_trap, harmonic_modes, rng):
        v = potential_on_grid(harmonic_trap, line_grid, 0.0)
        weights = coupling_weights(AmplitudeVector(random_amplitudes(8, rng)))
        solver = GPESolver(line_grid, v, 0.1)
        solution = solver.solve(weights, harmonic_modes.phi)
        assert solution.path == "coupled"
        assert solution.residual < solver.tol
        assert out_of_span_residual(solver, weights, solution.phi) < 10 * solver.tol
        assert ModePair(grid=line_grid, phi=solution.phi).orthonormality_error() < 1e-10

    def test_solution_is_a_fixed_point(self, line_grid, harmonic_trap, harmonic_modes, rng):
        v = potential_on_grid(harmonic_trap, line_grid, 0.0)
        weights = coupling_weights(AmplitudeVector(random_amplitudes(8, rng)))
        solver = GPESolver(line_grid, v, 0.1)
        first = solver.solve(weights, harmonic_modes.phi)
        again = solver.solve(weights, first.phi, reference=first.phi)
        assert again.iterations == 0
        assert np.allclose(again.phi, first.phi, atol=1e-12)

    def test_energy_is_stationary(self, line_grid, harmonic_trap, harmonic_modes, rng):
        v = potential_on_grid(harmonic_trap, line_grid, 0.0)
        weights = coupling_weights(AmplitudeVector(random_amplitudes(8, rng)))
        solver = GPESolver(line_grid, v, 0.1, tol=1e-10)
        rows = line_grid.restrict(solver.solve(weights, harmonic_modes.phi).phi)
        base = solver.energy_of(weights, rows)
        noise = rng.normal(size=rows.shape) + 1j * rng.normal(size=rows.shape)
        noise = solver.project_out(rows, noise)
        noise /= solver.norm(noise)
        rises = [
            solver.energy_of(weights, solver.orthonormalize(rows + delta * noise)) - base
            for delta in (1e-3, 1e-4)
        ]
        assert rises[0] > 0
        assert rises[1] > 0
        assert rises[0] / rises[1] == pytest.approx(100.0, rel=0.2)

    def test_residual_is_not_scaled_by_boson_number(
        self, line_grid, harmonic_trap, harmonic_modes, rng
    ):
        v = potential_on_grid(harmonic_trap, line_grid, 0.0)
        weights = coupling_weights(AmplitudeVector(random_amplitudes(8, rng)))
        solver = GPESolver(line_grid, v, 0.1, max_iterations=0)
        with pytest.raises(ConvergenceError) as excinfo:
            solver.solve(weights, harmonic_modes.phi)
        expected = out_of_span_residual(solver, weights, harmonic_modes.phi)
        assert excinfo.value.residual_history == [pytest.approx(expected, rel=1e-8)]

    def test_iteration_cap(self, line_grid, harmonic_trap, harmonic_modes, rng):
        v = potential_on_grid(harmonic_trap, line_grid, 0.0)
        solver = GPESolver(line_grid, v, 0.1, tol=1e-14, max_iterations=1)
        with pytest.raises(ConvergenceError) as excinfo:
            weights = coupling_weights(AmplitudeVector(random_amplitudes(8, rng)))
            solver.solve(weights, harmonic_modes.phi)
        assert 1 <= len(excinfo.value.residual_history) <= 2
        assert excinfo.value.details["path"] == "coupled"


class TestChemicalPotential:
    def test_grows_with_interaction(self, line_grid, harmonic_trap):
        v = potential_on_grid(harmonic_trap, line_grid, 0.0)
        weights = coupling_weights(initial_state(8))
        values = [
            GPESolver(line_grid, v, g).solve(weights, wide_seed(line_grid)).mu.mu[0, 0].real
            for g in (0.0, 0.05, 0.1, 0.2)
        ]
        assert np.all(np.diff(values) > 0)

    def test_matches_energy_per_added_atom(self, line_grid, harmonic_trap):
        g = 0.1
        v = potential_on_grid(harmonic_trap, line_grid, 0.0)
        energies, traces = [], []
        for n_bosons in (8, 10):
            weights = coupling_weights(initial_state(n_bosons))
            solution = GPESolver(line_grid, v, g, tol=1e-10).solve(weights, wide_seed(line_grid))
            energies.append(energy(weights, ModePair(grid=line_grid, phi=solution.phi), v, g))
            traces.append(solution.mu.trace)
        assert (energies[1] - energies[0]) / 2 == pytest.approx(np.mean(traces), rel=0.05)


def test_collapsed_seed(line_grid, harmonic_trap):
    v = potential_on_grid(harmonic_trap, line_grid, 0.0)
    seed = wide_seed(line_grid)
    seed[1] = 0.0
    with pytest.raises(NumericalError):
        GPESolver(line_grid, v, 0.0).solve(coupling_weights(basis_state(4, 0)), seed)


def test_align_phases(harmonic_modes):
    grid = harmonic_modes.grid
    rotated = harmonic_modes.phi * np.exp(1j * np.array([0.4, -1.1]))[:, None, None, None]
    assert np.allclose(align_phases(rotated, harmonic_modes.phi, grid), harmonic_modes.phi)
