"""
Giant-spin operators of the two-mode system.

S_x = (c2^+ c1 + c1^+ c2)/2, S_y = (c2^+ c1 - c1^+ c2)/2i, S_z = (c2^+ c2 - c1^+ c1)/2,
represented on the j = N/2 multiplet with |k> the S_z eigenstate of eigenvalue k.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.basis.coefficients import check_boson_count, check_cap
from app.core.config import settings


@dataclass(frozen=True)
class SpinMatrices:
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    s_plus: np.ndarray
    s_minus: np.ndarray

    @property
    def casimir(self) -> np.ndarray:
        """S^2 = S_x^2 + S_y^2 + S_z^2"""
        return self.sx @ self.sx + self.sy @ self.sy + self.sz @ self.sz


def ladder_coefficients(n_bosons: int) -> np.ndarray:
    """sqrt(j(j+1) - k(k+1)) for k = -j..j-1"""
    j = n_bosons / 2
    k = np.arange(-n_bosons // 2, n_bosons // 2, dtype=np.float64)
    return np.sqrt(j * (j + 1) - k * (k + 1))


def spin_matrices(n_bosons: int, cap: Optional[int] = None) -> SpinMatrices:
    check_boson_count(n_bosons)
    check_cap(n_bosons, settings.oracle_cap if cap is None else cap)

    k = np.arange(-n_bosons // 2, n_bosons // 2 + 1, dtype=np.float64)
    # S_+ |k> lands on |k+1>, one row below
    s_plus = np.diag(ladder_coefficients(n_bosons), -1).astype(np.complex128)
    s_minus = s_plus.conj().T
    sz = np.diag(k).astype(np.complex128)
    sx = (s_plus + s_minus) / 2
    sy = (s_plus - s_minus) / 2j
    return SpinMatrices(sx=sx, sy=sy, sz=sz, s_plus=s_plus, s_minus=s_minus)
