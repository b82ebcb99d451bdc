"""
Occupation, correlation and density observables of a two-mode state
"""

from dataclasses import dataclass, field
from typing import List

import numpy as np

from app.basis.coefficients import MODES, x_matrix
from app.core.logging import get_logger
from app.dynamics.amplitudes import AmplitudeVector
from app.dynamics.densities import ModePair

logger = get_logger(__name__)

ORTHONORMALITY_TOLERANCE = 1e-8


def n2(state: AmplitudeVector) -> float:
    """Mean occupation of mode 2: N/2 + sum_k k |b_k|^2, clipped to [0, N]"""
    h = state.n_bosons // 2
    k = np.arange(-h, h + 1)
    return float(np.clip(h + np.sum(k * state.probabilities), 0.0, state.n_bosons))


def one_body_matrix(state: AmplitudeVector) -> np.ndarray:
    """X_ij = <c_i^+ c_j>, array index 0 is mode 1"""
    n = state.n_bosons
    return np.array(
        [[np.vdot(state.b, x_matrix(i, j, n) @ state.b) for j in MODES] for i in MODES],
        dtype=np.complex128,
    )


@dataclass(frozen=True)
class CorrelationField:
    """G1(r, r') on flattened grid points"""

    values: np.ndarray
    t: float
    weight: float
    warnings: List[str] = field(default_factory=list)

    def trace(self) -> float:
        return float(np.real(np.trace(self.values)) * self.weight)

    def hermiticity_error(self) -> float:
        return float(np.abs(self.values - self.values.conj().T).max())

    @property
    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.values))


def g1(state: AmplitudeVector, modes: ModePair) -> CorrelationField:
    """G1(r, r') = sum_ij X_ij phi_i^*(r) phi_j(r')"""
    warnings = []
    error = modes.orthonormality_error()
    if error > ORTHONORMALITY_TOLERANCE:
        warnings.append(f"modes not orthonormal (max Gram deviation {error:.3e})")
        logger.warning("observables.nonorthonormal_modes", deviation=error, t=modes.t)
    x = one_body_matrix(state)
    phi = modes.phi.reshape(2, -1)
    values = np.einsum("ij,ir,js->rs", x, phi.conj(), phi)
    return CorrelationField(values=values, t=modes.t, weight=modes.grid.weight, warnings=warnings)


def density(state: AmplitudeVector, modes: ModePair) -> np.ndarray:
    """n(r) = G1(r, r)"""
    x = one_body_matrix(state)
    return np.real(np.einsum("ij,i...,j...->...", x, modes.phi.conj(), modes.phi))


def binomial_mode(theta: float, chi: float, modes: ModePair) -> np.ndarray:
    """Orbital occupied by every boson of the binomial state with angles (theta, chi)"""
    return (
        np.cos(theta) * np.exp(0.5j * chi) * modes.phi[0]
        + np.sin(theta) * np.exp(-0.5j * chi) * modes.phi[1]
    )


@dataclass(frozen=True)
class SpinExpectations:
    sx: float
    sy: float
    sz: float

    @property
    def length(self) -> float:
        return float(np.sqrt(self.sx**2 + self.sy**2 + self.sz**2))


def spin_expectations(state: AmplitudeVector) -> SpinExpectations:
    """<S_x>, <S_y>, <S_z> through the one-body matrix"""
    x = one_body_matrix(state)
    return SpinExpectations(
        sx=float(np.real(x[1, 0])),
        sy=float(np.imag(x[1, 0])),
        sz=float(np.real(x[1, 1] - x[0, 0]) / 2),
    )


@dataclass(frozen=True)
class NaturalOccupations:
    occupations: np.ndarray  # descending
    n_bosons: int

    @property
    def condensate_fraction(self) -> float:
        return float(self.occupations[0] / self.n_bosons)

    @property
    def fragmented(self) -> bool:
        return bool(self.occupations[1] > 0.1 * self.n_bosons)


def natural_occupations(state: AmplitudeVector) -> NaturalOccupations:
    values = np.linalg.eigvalsh(one_body_matrix(state))[::-1]
    return NaturalOccupations(occupations=values, n_bosons=state.n_bosons)


def pathway_contributions(
    first: np.ndarray, second: np.ndarray, start: int = 0
) -> np.ndarray:
    """
    C[n, m] = <n|U(T, T/2)|m><m|U(T/2, 0)|start>; rows sum to the transfer amplitude A(n, T).
    """
    return second * first[:, start][np.newaxis, :]
