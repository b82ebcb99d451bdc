"""
Bose-Hubbard Estimates

Two-site model H = -J S_x + (U/2) sum_i n_i (n_i - 1) on the fragmentation basis, with
J and U estimated from oscillator states localized in the two wells.
"""

from dataclasses import dataclass, field
from typing import Dict, Literal, Optional, Tuple

import numpy as np
import scipy.linalg

from app.basis.coefficients import check_boson_count
from app.basis.spin import ladder_coefficients
from app.core.errors import ResolutionError
from app.core.logging import get_logger
from app.dynamics.amplitudes import AmplitudeVector, basis_state, binomial_state
from app.trap.eigenmodes import ho_localized_modes, single_particle_hamiltonian
from app.trap.grid import Grid
from app.trap.potential import TrapSpec, well_potential

logger = get_logger(__name__)

Regime = Literal["josephson", "fock", "intermediate"]

JOSEPHSON_RATIO = 10.0
FOCK_RATIO = 0.1
NORM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class HubbardParams:
    J: float
    U: float
    J_orthogonal: float = float("nan")
    overlap: float = 0.0
    closed_form_ratio: float = float("nan")
    extras: Dict[str, float] = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        """|J|/U"""
        return abs(self.J) / self.U if self.U else float("inf")

    @property
    def regime(self) -> Regime:
        return classify_regime(self.J, self.U)


def classify_regime(J: float, U: float) -> Regime:
    if U <= 0:
        return "josephson"
    ratio = abs(J) / U
    if ratio >= JOSEPHSON_RATIO:
        return "josephson"
    if ratio <= FOCK_RATIO:
        return "fock"
    return "intermediate"


def closed_form_ratio(barrier_height: float, scattering_length: float, d: float) -> float:
    """(V_B / hbar w0)(a0 / a_s) exp(-d^2 / a0^2)"""
    if scattering_length <= 0:
        return float("inf")
    return barrier_height / scattering_length * float(np.exp(-(d**2)))


def hubbard_estimate(
    spec: TrapSpec,
    grid: Grid,
    d: float,
    scattering_length: float,
    barrier_height: Optional[float] = None,
) -> HubbardParams:
    """
    J = -2 <phi_L|h|phi_R> and U = g int |phi_L|^4 with g = 4 pi a_s (oscillator units).

    Integrals run over the active axes by quadrature; each reduced transverse axis
    contributes its Gaussian factor analytically.
    """
    barrier = spec.barrier_height.peak if barrier_height is None else barrier_height
    phi_l, phi_r = ho_localized_modes(spec, grid, d)
    for name, phi in (("phi_L", phi_l), ("phi_R", phi_r)):
        norm = grid.integrate(np.abs(phi) ** 2)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ResolutionError(
                "Grid does not resolve the localized states",
                details={"mode": name, "norm": float(norm), "d": d},
            )

    v_field = well_potential(
        grid.mesh,
        omega_perp=spec.omega_perp,
        half_separation=d,
        barrier_height=barrier,
        barrier_width=spec.barrier_width,
        tilt=0.0,
    )
    hamiltonian = single_particle_hamiltonian(grid, v_field)
    left, right = grid.restrict(phi_l), grid.restrict(phi_r)
    w = grid.weight

    overlap = float(w * left @ right)
    transverse = len(grid.reduced_axes) * 0.25 * (1.0 + spec.omega_perp**2)
    h_lr = float(w * left @ (hamiltonian @ right)) + overlap * transverse
    h_rr = float(w * right @ (hamiltonian @ right)) + transverse

    J = -2.0 * h_lr
    separation = 1.0 - overlap**2
    # coincident wells have no orthogonal partner
    J_orth = -2.0 * (h_lr - overlap * h_rr) / separation if separation > 1e-12 else 0.0

    g3d = 4.0 * np.pi * scattering_length
    quartic = float(grid.integrate(np.abs(phi_l) ** 4)) / np.sqrt(2 * np.pi) ** len(grid.reduced_axes)
    U = g3d * quartic

    params = HubbardParams(
        J=J,
        U=U,
        J_orthogonal=J_orth,
        overlap=overlap,
        closed_form_ratio=closed_form_ratio(barrier, scattering_length, d),
        extras={"h_lr": h_lr, "h_rr": h_rr, "barrier_height": barrier, "d": d},
    )
    logger.info(
        "hubbard.estimated",
        d=d,
        J=J,
        U=U,
        ratio=params.ratio,
        closed_form_ratio=params.closed_form_ratio,
        regime=params.regime,
    )
    return params


def hubbard_matrix(J: float, U: float, n_bosons: int) -> Tuple[np.ndarray, np.ndarray]:
    """(diagonal, off-diagonal) of the tridiagonal Bose-Hubbard Hamiltonian"""
    check_boson_count(n_bosons)
    h = n_bosons // 2
    k = np.arange(-h, h + 1, dtype=np.float64)
    diagonal = U * (h**2 - h + k**2)
    off_diagonal = -J * ladder_coefficients(n_bosons) / 2
    return diagonal, off_diagonal


def hubbard_ground_state(J: float, U: float, n_bosons: int) -> Tuple[float, AmplitudeVector]:
    diagonal, off_diagonal = hubbard_matrix(J, U, n_bosons)
    energies, vectors = scipy.linalg.eigh_tridiagonal(
        diagonal, off_diagonal, select="i", select_range=(0, 0)
    )
    vector = vectors[:, 0]
    pivot = np.argmax(np.abs(vector))
    vector = vector * np.sign(vector[pivot])
    return float(energies[0]), AmplitudeVector(vector.astype(np.complex128))


def josephson_state(n_bosons: int) -> AmplitudeVector:
    """Every boson in (phi_L + phi_R)/sqrt(2)"""
    return binomial_state(n_bosons, np.pi / 4, 0.0)


def fock_state(n_bosons: int) -> AmplitudeVector:
    """N/2 bosons in each well"""
    return basis_state(n_bosons, 0)


def josephson_energy(J: float, U: float, n_bosons: int) -> float:
    return -J * n_bosons / 2 + U * n_bosons * (n_bosons - 1) / 4


def fock_energy(U: float, n_bosons: int) -> float:
    return U * n_bosons * (n_bosons - 2) / 4


def overlap(a: AmplitudeVector, b: AmplitudeVector) -> float:
    """|<a|b>|^2"""
    return float(abs(np.vdot(a.b, b.b)) ** 2)
