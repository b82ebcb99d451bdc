"""
Generalized Gross-Pitaevskii solver

For fixed occupation weights X_ij, Y_ijmn the two modes satisfy

    N sum_j mu_ij phi_j = sum_j X_ij h phi_j + g sum_jmn Y_ijmn phi_j^* phi_m phi_n

with h = -1/2 Laplacian + V and phi_1, phi_2 orthonormal. The energy depends on the modes
through their span and on the frame inside the span only through b, so the solver drives
the out-of-span gradient R_i - sum_j <phi_j|R_i> phi_j to zero and keeps the in-span frame
continuous with a reference pair (the modes of the previous time step). mu is read off by
projection.

Three paths:
  degenerate  one mode unoccupied; its equation is empty and it becomes the lowest
              single-particle state orthogonal to the occupied one
  linear      g = 0; the span is the two lowest eigenstates of h
  coupled     preconditioned nonlinear conjugate gradient on the Grassmannian, run in the
              natural-orbital frame of X

All work happens on free-point vectors (2, n_free); fields are embedded on return.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Literal, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, lobpcg, splu

from app.basis.coefficients import MODES, x_matrix, y_matrix
from app.core.config import settings
from app.core.errors import ConvergenceError, NumericalError
from app.core.logging import get_logger
from app.dynamics.amplitudes import AmplitudeVector
from app.dynamics.densities import ModeIntegrals, ModePair, integrals
from app.trap.eigenmodes import DENSE_LIMIT, lowest_eigenpairs
from app.trap.grid import Grid

logger = get_logger(__name__)

SolvePath = Literal["coupled", "degenerate", "linear"]

PRECONDITIONER_SHIFT = 1.0
# natural-orbital weight, relative to N, below which a mode carries no stiffness
FLAT_WEIGHT = 1e-14
ARMIJO = 1e-4
EXTRAPOLATION = 4.0
MAX_BACKTRACKS = 30
# energy differences below this fraction of |E| are round-off
ROUNDOFF = 64 * np.finfo(np.float64).eps
RESIDUAL_GROWTH = 10.0


@dataclass(frozen=True)
class CouplingWeights:
    """X_ij = b^H X^{ij} b and Y_ijmn = b^H Y^{ijmn} b, array index 0 is mode 1"""

    X: np.ndarray
    Y: np.ndarray
    n_bosons: int

    @property
    def occupations(self) -> np.ndarray:
        return np.real(np.diag(self.X))

    def natural_orbitals(self) -> Tuple[np.ndarray, np.ndarray]:
        """Eigenvalues of X, largest first, and the unitary whose columns are its eigenvectors"""
        values, vectors = np.linalg.eigh(self.X)
        return np.clip(values[::-1], 0.0, None), vectors[:, ::-1]

    def rotated(self, frame: np.ndarray) -> "CouplingWeights":
        """Weights seen by the modes chi = frame^H phi"""
        X = frame.conj().T @ self.X @ frame
        Y = np.einsum("ia,jb,ijmn,mc,nd->abcd", frame.conj(), frame.conj(), self.Y, frame, frame)
        return CouplingWeights(X=X, Y=Y, n_bosons=self.n_bosons)

    def rank_one(self) -> "CouplingWeights":
        """Keep only the mode-1 entries"""
        X = np.zeros_like(self.X)
        Y = np.zeros_like(self.Y)
        X[0, 0] = self.X[0, 0]
        Y[0, 0, 0, 0] = self.Y[0, 0, 0, 0]
        return CouplingWeights(X=X, Y=Y, n_bosons=self.n_bosons)


@dataclass(frozen=True)
class ChemicalPotentialMatrix:
    mu: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.mu)))


@dataclass
class ModeSolution:
    phi: np.ndarray  # (2, nx, ny, nz)
    mu: ChemicalPotentialMatrix
    residual_history: List[float] = field(default_factory=list)
    path: SolvePath = "coupled"

    @property
    def iterations(self) -> int:
        return max(len(self.residual_history) - 1, 0)

    @property
    def residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else 0.0


def coupling_weights(state: AmplitudeVector) -> CouplingWeights:
    b = state.b
    n = state.n_bosons
    X = np.zeros((2, 2), dtype=np.complex128)
    Y = np.zeros((2, 2, 2, 2), dtype=np.complex128)
    for i in MODES:
        for j in MODES:
            X[i - 1, j - 1] = np.vdot(b, x_matrix(i, j, n) @ b)
            for m in MODES:
                for k in MODES:
                    Y[i - 1, j - 1, m - 1, k - 1] = np.vdot(b, y_matrix(i, j, m, k, n) @ b)
    return CouplingWeights(X=X, Y=Y, n_bosons=n)


def chemical_potential(mu: ChemicalPotentialMatrix) -> float:
    """mu = sum_i mu_ii"""
    return mu.trace


def energy_from_integrals(weights: CouplingWeights, values: ModeIntegrals) -> float:
    total = np.sum(weights.X * values.h) + np.sum(weights.Y * values.v)
    return float(np.real(total))


def energy(weights: CouplingWeights, modes: ModePair, v_field: np.ndarray, g: float) -> float:
    """E = sum X_ij h_ij + sum Y_ijmn v_ijmn"""
    return energy_from_integrals(weights, integrals(modes, v_field, g))


def align_phases(phi: np.ndarray, reference: np.ndarray, grid: Grid) -> np.ndarray:
    """Rotate each mode so that <reference_i|phi_i> is real and positive"""
    aligned = phi.copy()
    for i in range(phi.shape[0]):
        overlap = grid.inner(reference[i], phi[i])
        if abs(overlap) > 0:
            aligned[i] = phi[i] * (np.conj(overlap) / abs(overlap))
    return aligned


class GPESolver:
    """Mode solver for one potential snapshot"""

    def __init__(
        self,
        grid: Grid,
        v_field: np.ndarray,
        g: float,
        tol: float = 1e-8,
        max_iterations: int = 2000,
        descent_step: float = 1.0,
        unoccupied_threshold: Optional[float] = None,
    ):
        grid.check_field(v_field, "potential")
        self.grid = grid
        self.g = float(g)
        self.tol = tol
        self.max_iterations = max_iterations
        self.descent_step = descent_step
        self.unoccupied_threshold = (
            settings.unoccupied_threshold if unoccupied_threshold is None else unoccupied_threshold
        )
        self.w = grid.weight
        self.v = grid.restrict(np.asarray(v_field, dtype=np.float64))
        self.kinetic = grid.kinetic
        self.h = (self.kinetic + sp.diags(self.v)).tocsr()

    # free-point linear algebra

    def overlaps(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """[j, i] = <a_j|b_i>"""
        return self.w * (a.conj() @ b.T)

    def norm(self, vector: np.ndarray) -> float:
        return float(np.sqrt(self.w * np.vdot(vector, vector).real))

    def real_inner(self, a: np.ndarray, b: np.ndarray) -> float:
        """Re sum_i <a_i|b_i>"""
        return float(self.w * np.vdot(a, b).real)

    def orthonormalize(self, phi: np.ndarray) -> np.ndarray:
        """Gram-Schmidt in mode order"""
        out = np.array(phi, dtype=np.complex128)
        for i in range(out.shape[0]):
            for j in range(i):
                out[i] -= self.w * np.vdot(out[j], out[i]) * out[j]
            norm = self.norm(out[i])
            if not np.isfinite(norm) or norm < 1e-300:
                raise NumericalError("Mode collapsed during orthonormalization", details={"mode": i + 1})
            out[i] /= norm
        return out

    def project_out(self, phi: np.ndarray, rows: np.ndarray) -> np.ndarray:
        """rows_i - sum_j <phi_j|rows_i> phi_j"""
        return rows - self.overlaps(phi, rows).T @ phi

    def phase_align(self, phi: np.ndarray, reference: np.ndarray) -> np.ndarray:
        overlap = np.einsum("ix,ix->i", reference.conj(), phi) * self.w
        size = np.abs(overlap)
        phases = np.where(size > 0, overlap.conj() / np.where(size > 0, size, 1.0), 1.0)
        return phi * phases[:, None]

    def apply_h(self, phi: np.ndarray) -> np.ndarray:
        return (self.h @ phi.T).T

    def rhs(self, weights: CouplingWeights, phi: np.ndarray) -> np.ndarray:
        """R_i = sum_j X_ij h phi_j + g sum_jmn Y_ijmn phi_j^* phi_m phi_n"""
        out = weights.X @ self.apply_h(phi)
        if self.g:
            out = out + self.g * np.einsum("ijmn,jx,mx,nx->ix", weights.Y, phi.conj(), phi, phi)
        return out

    def energy_of(self, weights: CouplingWeights, phi: np.ndarray) -> float:
        total = np.sum(weights.X * self.overlaps(phi, self.apply_h(phi)))
        if self.g:
            v = 0.5 * self.g * self.w * np.einsum("ax,bx,cx,dx->abcd", phi.conj(), phi.conj(), phi, phi)
            total = total + np.sum(weights.Y * v)
        return float(np.real(total))

    def gradient(self, weights: CouplingWeights, phi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Out-of-span gradient and the raw projection [j, i] = <phi_j|R_i>"""
        r = self.rhs(weights, phi)
        a = self.overlaps(phi, r)
        return r - a.T @ phi, a

    def residual_value(self, grad: np.ndarray) -> float:
        """Largest per-mode norm of the out-of-span gradient"""
        return max(self.norm(g_i) for g_i in grad)

    def chemical_potential_matrix(self, weights: CouplingWeights, phi: np.ndarray) -> ChemicalPotentialMatrix:
        """
        N mu_ij = <phi_j|R_i>, reported Hermitized.

        The residual certificate uses the raw projection; the skew part is a frame
        velocity and does not enter the out-of-span gradient.
        """
        a = self.overlaps(phi, self.rhs(weights, phi))
        mu = a.T / weights.n_bosons
        return ChemicalPotentialMatrix(mu=(mu + mu.conj().T) / 2)

    def shifted_inverse(self, shift: float = 0.0) -> Callable[[np.ndarray], np.ndarray]:
        """Inverse of h - min(V) + shift + PRECONDITIONER_SHIFT on (k, n_free) complex rows"""
        diagonal = self.v - self.v.min() + PRECONDITIONER_SHIFT + shift
        lu = splu((self.kinetic + sp.diags(diagonal)).tocsc())

        def apply(rows: np.ndarray) -> np.ndarray:
            rows = np.atleast_2d(rows)
            real = lu.solve(np.ascontiguousarray(rows.real.T))
            imag = lu.solve(np.ascontiguousarray(rows.imag.T))
            return (real + 1j * imag).T

        return apply

    def natural_preconditioner(
        self, weights: CouplingWeights, chi: np.ndarray
    ) -> Callable[[np.ndarray], np.ndarray]:
        """
        Per-mode inverse of n_a (h - min V + shift) + sigma_a for modes in the natural-orbital
        frame, where sigma_a bounds the interaction curvature of mode a. Modes with neither
        occupation nor interaction weight are left untouched.
        """
        occupations = weights.occupations
        floor = FLAT_WEIGHT * weights.n_bosons
        peak = float(np.max(np.sum(np.abs(chi) ** 2, axis=0)))
        stiffness = self.g * np.abs(weights.Y).reshape(2, -1).sum(axis=1) * peak
        inverses = []
        for n_a, s_a in zip(occupations, stiffness):
            if n_a < floor and s_a < floor:
                inverses.append(None)
                continue
            scale = max(float(n_a), floor)
            inverses.append((self.shifted_inverse(float(s_a) / scale), scale))

        def apply(grad: np.ndarray) -> np.ndarray:
            out = np.zeros_like(grad)
            for a, entry in enumerate(inverses):
                if entry is not None:
                    inverse, scale = entry
                    out[a] = inverse(grad[a])[0] / scale
            return out

        return apply

    # solve paths

    def solve(
        self, weights: CouplingWeights, seed: np.ndarray, reference: Optional[np.ndarray] = None
    ) -> ModeSolution:
        """
        Solve from seed fields (2, nx, ny, nz).

        The in-span frame follows `reference` (default: the seed): each mode's phase is
        aligned to it and, on the linear path, the unitary frame closest to it is chosen.
        """
        self.grid.check_field(seed, "seed")
        if reference is None:
            reference = seed
        else:
            self.grid.check_field(reference, "reference")
        target = self.grid.restrict(reference)
        start = self.phase_align(self.orthonormalize(self.grid.restrict(seed)), target)

        occupations = weights.occupations
        p = int(np.argmin(occupations))
        path: SolvePath
        if occupations[p] < self.unoccupied_threshold * weights.n_bosons:
            phi, history = self._solve_degenerate(weights, start, p)
            phi = self.phase_align(phi, target)
            path = "degenerate"
        elif self.g == 0.0:
            phi, history = self._solve_linear(weights, target)
            path = "linear"
            if history[-1] >= self.tol:
                phi, more = self._solve_coupled(weights, phi)
                history = history + more[1:]
        else:
            phi, history = self._solve_coupled(weights, start)
            path = "coupled"

        mu = self.chemical_potential_matrix(weights, phi)
        logger.debug(
            "gpe.solved",
            path=path,
            iterations=max(len(history) - 1, 0),
            residual=history[-1],
            mu_trace=mu.trace,
        )
        return ModeSolution(phi=self.grid.embed(phi), mu=mu, residual_history=history, path=path)

    def _fail(self, history: List[float], path: SolvePath, **details) -> ConvergenceError:
        return ConvergenceError(
            "Mode solver did not converge",
            residual_history=history,
            details={
                "path": path,
                "tol": self.tol,
                "max_iterations": self.max_iterations,
                **details,
            },
        )

    def _solve_linear(
        self, weights: CouplingWeights, target: np.ndarray
    ) -> Tuple[np.ndarray, List[float]]:
        _, vectors = lowest_eigenpairs(self.h, 2, shift=float(self.v.min()) - 1.0)
        basis = self.orthonormalize(vectors.T / np.sqrt(self.w))
        # unitary T maximizing Re sum_i <target_i|(T basis)_i>
        u, _, vh = np.linalg.svd(self.overlaps(basis, target).conj())
        phi = (vh.conj().T @ u.conj().T) @ basis
        grad, _ = self.gradient(weights, phi)
        return phi, [self.residual_value(grad)]

    def _solve_coupled(
        self, weights: CouplingWeights, phi: np.ndarray
    ) -> Tuple[np.ndarray, List[float]]:
        occupations, frame = weights.natural_orbitals()
        local = weights.rotated(frame)
        if occupations[1] < self.unoccupied_threshold * weights.n_bosons:
            logger.debug("gpe.rank_one", occupation=float(occupations[1]))
            local = local.rank_one()
        chi = frame.conj().T @ phi
        precondition = self.natural_preconditioner(local, chi)

        grad, _ = self.gradient(local, chi)
        history = [self.residual_value(frame @ grad)]
        current = self.energy_of(local, chi)
        step = self.descent_step
        direction: Optional[np.ndarray] = None
        previous_grad: Optional[np.ndarray] = None
        previous_gz = 0.0
        while history[-1] >= self.tol:
            if len(history) > self.max_iterations:
                raise self._fail(history, "coupled")
            z = self.project_out(chi, precondition(grad))
            gz = self.real_inner(z, grad)
            if not gz > 0:
                raise self._fail(history, "coupled", reason="flat direction")
            search = -z
            if direction is not None and previous_gz > 0:
                # Polak-Ribiere+, previous quantities moved to the current tangent space
                beta = max(0.0, (gz - self.real_inner(z, previous_grad)) / previous_gz)
                search = search + beta * self.project_out(chi, direction)
            slope = 2 * self.real_inner(search, grad)
            if slope >= 0:
                search, slope = -z, -2 * gz

            accepted = self._line_search(local, chi, grad, search, slope, current, step)
            if accepted is None:
                raise self._fail(history, "coupled", reason="line search")
            previous_grad, direction, previous_gz = grad, search, gz
            chi, grad, current, step = accepted
            history.append(self.residual_value(frame @ grad))
        return frame @ chi, history

    def _line_search(
        self,
        weights: CouplingWeights,
        chi: np.ndarray,
        grad: np.ndarray,
        search: np.ndarray,
        slope: float,
        current: float,
        step: float,
    ) -> Optional[Tuple[np.ndarray, np.ndarray, float, float]]:
        """Secant on the directional derivative, safeguarded by an Armijo test on the energy"""

        def at(alpha: float) -> Tuple[np.ndarray, np.ndarray]:
            point = self.orthonormalize(chi + alpha * search)
            return point, self.gradient(weights, point)[0]

        trial, trial_grad = at(step)
        trial_slope = 2 * self.real_inner(self.project_out(trial, search), trial_grad)
        if trial_slope > slope:
            alpha = min(step * slope / (slope - trial_slope), EXTRAPOLATION * step)
        else:
            alpha = EXTRAPOLATION * step
        point, point_grad = (trial, trial_grad) if abs(alpha - step) <= 0.1 * step else at(alpha)

        floor = ROUNDOFF * max(abs(current), 1.0)
        size = self.norm(grad)
        for _ in range(MAX_BACKTRACKS):
            value = self.energy_of(weights, point)
            if np.isfinite(value):
                if value <= current + ARMIJO * alpha * slope:
                    return point, point_grad, value, alpha
                # energy change below round-off; fall back on the gradient
                if value <= current + floor and self.norm(point_grad) <= RESIDUAL_GROWTH * size:
                    return point, point_grad, value, alpha
            alpha /= 2
            point, point_grad = at(alpha)
        return None

    def _solve_degenerate(
        self, weights: CouplingWeights, phi: np.ndarray, p: int
    ) -> Tuple[np.ndarray, List[float]]:
        q = 1 - p
        occupied, occupied_history = self._solve_occupied(weights, phi[q], q)
        orthogonal, orthogonal_history = self._solve_orthogonal(occupied, phi[p])
        out = np.empty_like(phi)
        out[q], out[p] = occupied, orthogonal
        history = [max(a, b) for a, b in _zip_longest_last(occupied_history, orthogonal_history)]
        return out, history

    def _solve_occupied(
        self, weights: CouplingWeights, phi: np.ndarray, q: int
    ) -> Tuple[np.ndarray, List[float]]:
        """Single-mode GPE with X_qq, Y_qqqq by self-consistent eigen-iteration with density mixing"""
        x_qq = float(np.real(weights.X[q, q]))
        coupling = self.g * float(np.real(weights.Y[q, q, q, q])) / x_qq if x_qq > 0 else 0.0
        mixing = 0.5 if coupling else 1.0
        phi = phi / self.norm(phi)
        density = np.abs(phi) ** 2

        def residual(vector: np.ndarray) -> float:
            applied = self.h @ vector + coupling * np.abs(vector) ** 2 * vector
            expectation = self.w * np.vdot(vector, applied)
            return x_qq * self.norm(applied - expectation * vector)

        history = [residual(phi)]
        while history[-1] >= self.tol:
            if len(history) > self.max_iterations:
                raise self._fail(history, "degenerate")
            operator = (self.h + sp.diags(coupling * density)).tocsr()
            shift = float((self.v + coupling * density).min()) - 1.0
            _, vectors = lowest_eigenpairs(operator, 1, shift=shift, seed=phi)
            candidate = vectors[:, 0] / np.sqrt(self.w)
            overlap = self.w * np.vdot(candidate, phi)
            if abs(overlap) > 0:
                candidate = candidate * (overlap / abs(overlap))
            phi = candidate.astype(np.complex128)
            density = (1 - mixing) * density + mixing * np.abs(phi) ** 2
            history.append(residual(phi))
        return phi, history

    def _solve_orthogonal(self, occupied: np.ndarray, phi: np.ndarray) -> Tuple[np.ndarray, List[float]]:
        """Lowest eigenvector of h in the complement of the occupied mode"""
        u_q = np.sqrt(self.w) * occupied

        def project(vector: np.ndarray) -> np.ndarray:
            return vector - u_q * np.vdot(u_q, vector)

        def residual(vector: np.ndarray) -> float:
            applied = project(self.h @ vector)
            expectation = self.w * np.vdot(vector, applied)
            return self.norm(applied - expectation * vector)

        phi = project(np.sqrt(self.w) * phi) / np.sqrt(self.w)
        phi = phi / self.norm(phi)
        history = [residual(phi)]
        if history[-1] < self.tol:
            return phi, history

        n = len(u_q)
        if n <= DENSE_LIMIT:
            dense = self.h.toarray().astype(np.complex128)
            h_u = dense @ u_q
            ceiling = float(np.abs(dense).sum(axis=1).max()) + 1.0
            # P h P with P = 1 - u u^H, plus a ceiling on u itself
            matrix = (
                dense
                - np.outer(u_q, h_u.conj())
                - np.outer(h_u, u_q.conj())
                + (np.vdot(u_q, h_u).real + ceiling) * np.outer(u_q, u_q.conj())
            )
            _, vectors = scipy.linalg.eigh(matrix, subset_by_index=[0, 0])
            vector = vectors[:, 0]
        else:
            apply_k = self.shifted_inverse()
            precondition = LinearOperator(
                (n, n), matvec=lambda x: apply_k(np.ravel(x))[0], dtype=np.complex128
            )
            start = (np.sqrt(self.w) * phi).reshape(n, 1)
            _, vectors = lobpcg(
                self.h.astype(np.complex128),
                start,
                M=precondition,
                Y=u_q.reshape(n, 1),
                tol=self.tol,
                maxiter=self.max_iterations,
                largest=False,
            )
            vector = vectors[:, 0]
        candidate = project(vector) / np.sqrt(self.w)
        candidate = candidate / self.norm(candidate)
        overlap = self.w * np.vdot(candidate, phi)
        if abs(overlap) > 0:
            candidate = candidate * (overlap / abs(overlap))
        history.append(residual(candidate))
        if not np.isfinite(history[-1]):
            raise NumericalError("Orthogonal mode solve produced non-finite values")
        return candidate, history


def _zip_longest_last(a: List[float], b: List[float]) -> List[Tuple[float, float]]:
    """Pair two histories, padding the shorter with its last value"""
    length = max(len(a), len(b))
    return [(a[min(i, len(a) - 1)], b[min(i, len(b) - 1)]) for i in range(length)]


def solve_modes(
    weights: CouplingWeights,
    grid: Grid,
    v_field: np.ndarray,
    g: float,
    seed: np.ndarray,
    **options,
) -> Tuple[ModePair, ChemicalPotentialMatrix]:
    solution = GPESolver(grid, v_field, g, **options).solve(weights, seed)
    return ModePair(grid=grid, phi=solution.phi), solution.mu
