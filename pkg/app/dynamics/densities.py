"""
Density kernels and matrix assembly

Pointwise kernels of the mode pair

    W_ij = 1/2 sum_mu d_mu phi_i^* d_mu phi_j + phi_i^* V phi_j
    V_ijmn = (g/2) phi_i^* phi_j^* phi_m phi_n
    T_ij = (1/2i) (d_t phi_i^* phi_j - phi_i^* d_t phi_j)

and their integrals contracted with the basis coefficients into the Hamiltonian matrix H
and the rotation matrix U. Mode index 0 in arrays is mode 1.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional

import numpy as np
import scipy.sparse as sp

from app.basis.coefficients import MODES, FragBasis, x_matrix, y_matrix
from app.core.errors import NumericalError, ShapeError
from app.trap.grid import Grid, Scheme

PAIRS = [(i, j) for i in MODES for j in MODES]
QUARTETS = [(i, j, m, n) for i in MODES for j in MODES for m in MODES for n in MODES]


@dataclass(frozen=True)
class ModePair:
    """phi_1, phi_2 stacked as phi[0], phi[1] with shape (2, nx, ny, nz)"""

    grid: Grid
    phi: np.ndarray
    dphi_dt: Optional[np.ndarray] = None
    t: float = 0.0
    scheme: Scheme = "forward"

    def __post_init__(self) -> None:
        if self.phi.shape != (2,) + self.grid.shape:
            raise ShapeError(
                "Mode pair must have shape (2, nx, ny, nz)",
                details={"shape": list(self.phi.shape), "grid": list(self.grid.shape)},
            )
        if self.dphi_dt is not None and self.dphi_dt.shape != self.phi.shape:
            raise ShapeError("Time derivative shape differs from the modes")

    @property
    def time_derivative(self) -> np.ndarray:
        return np.zeros_like(self.phi) if self.dphi_dt is None else self.dphi_dt

    @cached_property
    def gradient(self) -> np.ndarray:
        """(n_active, 2, nx, ny, nz)"""
        return self.grid.gradient(self.phi, self.scheme)

    @property
    def gram(self) -> np.ndarray:
        flat = self.phi.reshape(2, -1)
        return self.grid.weight * (flat.conj() @ flat.T)

    def orthonormality_error(self) -> float:
        return float(np.abs(self.gram - np.eye(2)).max())

    def replace(self, **changes) -> "ModePair":
        values = {
            "grid": self.grid,
            "phi": self.phi,
            "dphi_dt": self.dphi_dt,
            "t": self.t,
            "scheme": self.scheme,
        }
        values.update(changes)
        return ModePair(**values)


@dataclass(frozen=True)
class ModeIntegrals:
    """h_ij = int W_ij, v_ijmn = int V_ijmn, t_ij = int T_ij"""

    h: np.ndarray
    v: np.ndarray
    t: np.ndarray


@dataclass(frozen=True)
class MatrixPair:
    H: sp.csr_matrix
    U: sp.csr_matrix
    integrals: ModeIntegrals = field(repr=False, default=None)  # type: ignore[assignment]

    @property
    def generator(self) -> sp.csr_matrix:
        """H - U"""
        return (self.H - self.U).tocsr()


def _check_potential(modes: ModePair, v_field: np.ndarray) -> None:
    if v_field.shape != modes.grid.shape:
        raise ShapeError(
            "Potential sampled on a different grid",
            details={"shape": list(v_field.shape), "grid": list(modes.grid.shape)},
        )


def kernel_W(modes: ModePair, v_field: np.ndarray) -> np.ndarray:
    """(2, 2, nx, ny, nz)"""
    _check_potential(modes, v_field)
    grad = modes.gradient
    kinetic = 0.5 * np.einsum("ai...,aj...->ij...", grad.conj(), grad)
    return kinetic + np.einsum("i...,...,j...->ij...", modes.phi.conj(), v_field, modes.phi)


def kernel_V(modes: ModePair, g: float) -> np.ndarray:
    """(2, 2, 2, 2, nx, ny, nz)"""
    phi = modes.phi
    conj = phi.conj()
    return 0.5 * g * np.einsum("i...,j...,m...,n...->ijmn...", conj, conj, phi, phi)


def kernel_T(modes: ModePair) -> np.ndarray:
    """(2, 2, nx, ny, nz)"""
    phi, dphi = modes.phi, modes.time_derivative
    return (
        np.einsum("i...,j...->ij...", dphi.conj(), phi)
        - np.einsum("i...,j...->ij...", phi.conj(), dphi)
    ) / 2j


def nonfinite_report(modes: ModePair, v_field: np.ndarray) -> List[Dict]:
    """Location of the first non-finite sample in each input field"""
    report = []
    fields = {
        "phi": modes.phi,
        "dphi_dt": modes.time_derivative,
        "potential": v_field,
    }
    for name, values in fields.items():
        bad = np.argwhere(~np.isfinite(values))
        if len(bad):
            report.append({"field": name, "index": bad[0].tolist(), "count": int(len(bad))})
    return report


def integrals(modes: ModePair, v_field: np.ndarray, g: float) -> ModeIntegrals:
    """Grid integrals of the three kernels without materializing the quartic field"""
    _check_potential(modes, v_field)
    grid = modes.grid
    w = grid.weight
    phi = modes.phi.reshape(2, -1)
    conj = phi.conj()
    grad = modes.gradient.reshape(len(grid.active_axes), 2, -1)
    dphi = modes.time_derivative.reshape(2, -1)

    kinetic = 0.5 * np.einsum("aix,ajx->ij", grad.conj(), grad)
    h = w * (kinetic + (conj * v_field.ravel()) @ phi.T)
    v = 0.5 * g * w * np.einsum("ix,jx,mx,nx->ijmn", conj, conj, phi, phi)
    t = w * (dphi.conj() @ phi.T - conj @ dphi.T) / 2j
    result = ModeIntegrals(h=h, v=v, t=t)
    if not all(np.all(np.isfinite(a)) for a in (h, v, t)):
        raise NumericalError(
            "Non-finite kernel integrals",
            details={"t": modes.t, "locations": nonfinite_report(modes, v_field)},
        )
    return result


def contract(values: ModeIntegrals, basis: FragBasis) -> MatrixPair:
    """H = sum X^{ij} h_ij + sum Y^{ijmn} v_ijmn, U = sum X^{ij} t_ij"""
    n = basis.n_bosons
    dim = basis.dim
    H = sp.csr_matrix((dim, dim), dtype=np.complex128)
    U = sp.csr_matrix((dim, dim), dtype=np.complex128)
    for i, j in PAIRS:
        x = x_matrix(i, j, n)
        H = H + values.h[i - 1, j - 1] * x
        U = U + values.t[i - 1, j - 1] * x
    for i, j, m, k in QUARTETS:
        coefficient = values.v[i - 1, j - 1, m - 1, k - 1]
        if coefficient != 0:
            H = H + coefficient * y_matrix(i, j, m, k, n)
    return MatrixPair(H=H.tocsr(), U=U.tocsr(), integrals=values)


def assemble_matrices(
    modes: ModePair, basis: FragBasis, v_field: np.ndarray, g: float
) -> MatrixPair:
    return contract(integrals(modes, v_field, g), basis)
