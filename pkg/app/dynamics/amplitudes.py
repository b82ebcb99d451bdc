"""
Fragmented-state amplitudes

The state is sum_k b_k |k>, k = -N/2..N/2, and obeys i db/dt = (H - U) b with H the
Hamiltonian matrix and U the rotation matrix of the moving mode basis. Every step is
renormalized to unit norm.
"""

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp
from scipy.stats import binom

from app.basis.coefficients import FragBasis, check_boson_count
from app.core.errors import NumericalError, ShapeError

MatrixLike = Union[np.ndarray, sp.spmatrix]
MatrixSource = Union[MatrixLike, Callable[[float], MatrixLike]]

NORM_FLOOR = 1e-12


@dataclass(frozen=True)
class AmplitudeVector:
    """b_k in k-ascending order, the time t, and the norm before the last renormalization"""

    b: np.ndarray
    t: float = 0.0
    pre_norm: float = 1.0

    def __post_init__(self) -> None:
        if self.b.ndim != 1 or len(self.b) % 2 != 1 or len(self.b) < 3:
            raise ShapeError("Amplitude vector must have odd length N+1", details={"len": len(self.b)})

    @property
    def n_bosons(self) -> int:
        return len(self.b) - 1

    @property
    def basis(self) -> FragBasis:
        return FragBasis(self.n_bosons)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.b))

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.b) ** 2

    def with_phase(self, alpha: float) -> "AmplitudeVector":
        return AmplitudeVector(self.b * np.exp(1j * alpha), self.t, self.pre_norm)


def initial_state(n_bosons: int, t: float = 0.0) -> AmplitudeVector:
    """All bosons in mode 1: b_k = delta_{k, -N/2}"""
    check_boson_count(n_bosons)
    b = np.zeros(n_bosons + 1, dtype=np.complex128)
    b[0] = 1.0
    return AmplitudeVector(b, t)


def basis_state(n_bosons: int, k: int, t: float = 0.0) -> AmplitudeVector:
    index = FragBasis(n_bosons).index(k)
    b = np.zeros(n_bosons + 1, dtype=np.complex128)
    b[index] = 1.0
    return AmplitudeVector(b, t)


def binomial_state(n_bosons: int, theta: float, chi: float, t: float = 0.0) -> AmplitudeVector:
    """
    Single condensate in cos(theta) e^{i chi/2} phi_1 + sin(theta) e^{-i chi/2} phi_2:

        b_k = sqrt(C(N, N/2+k)) cos^{N/2-k}(theta) sin^{N/2+k}(theta) e^{-i k chi}
    """
    check_boson_count(n_bosons)
    h = n_bosons // 2
    k = np.arange(-h, h + 1)
    cos, sin = np.cos(theta), np.sin(theta)
    moduli = np.sqrt(binom.pmf(h + k, n_bosons, sin**2))
    signs = np.sign(cos) ** (h - k) * np.sign(sin) ** (h + k)
    b = moduli * np.where(signs == 0, 1.0, signs) * np.exp(-1j * k * chi)
    b = b / np.linalg.norm(b)
    return AmplitudeVector(b.astype(np.complex128), t)


def _generator(source: MatrixSource, t: float) -> MatrixLike:
    return source(t) if callable(source) else source


def _renormalized(raw: np.ndarray, t: float) -> AmplitudeVector:
    pre_norm = float(np.linalg.norm(raw))
    if not np.isfinite(pre_norm) or pre_norm < NORM_FLOOR:
        raise NumericalError(
            "Amplitude norm underflow", details={"t": t, "pre_norm": pre_norm}
        )
    return AmplitudeVector(raw / pre_norm, t, pre_norm)


def euler_raw(b: np.ndarray, h: MatrixLike, u: MatrixLike, dt: float) -> np.ndarray:
    """b - i dt (H - U) b, columnwise for 2D input"""
    return b - 1j * dt * ((h - u) @ b)


def rk4_raw(
    b: np.ndarray, h: MatrixSource, u: MatrixSource, t: float, dt: float
) -> np.ndarray:
    def rhs(s: float, y: np.ndarray) -> np.ndarray:
        return -1j * ((_generator(h, s) - _generator(u, s)) @ y)

    k1 = rhs(t, b)
    k2 = rhs(t + dt / 2, b + dt / 2 * k1)
    k3 = rhs(t + dt / 2, b + dt / 2 * k2)
    k4 = rhs(t + dt, b + dt * k3)
    return b + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def step_euler(state: AmplitudeVector, h: MatrixLike, u: MatrixLike, dt: float) -> AmplitudeVector:
    if dt <= 0:
        raise ValueError("dt must be positive")
    return _renormalized(euler_raw(state.b, h, u, dt), state.t + dt)


def step_rk4(state: AmplitudeVector, h: MatrixSource, u: MatrixSource, dt: float) -> AmplitudeVector:
    """Classical fourth-order step; H and U may be matrices or callables of t"""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return _renormalized(rk4_raw(state.b, h, u, state.t, dt), state.t + dt)


def step_map(
    h: MatrixSource, u: MatrixSource, t: float, dt: float, integrator: str = "euler"
) -> np.ndarray:
    """Dense linear map of one unnormalized step"""
    dim = (_generator(h, t)).shape[0]
    identity = np.eye(dim, dtype=np.complex128)
    if integrator == "rk4":
        return rk4_raw(identity, h, u, t, dt)
    return euler_raw(identity, _generator(h, t), _generator(u, t), dt)


def transfer_probabilities(state: AmplitudeVector) -> np.ndarray:
    """P(n) = |b_{n-N/2}|^2, probability of n bosons in mode 2"""
    return state.probabilities
