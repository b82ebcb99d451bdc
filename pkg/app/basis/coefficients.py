"""
Fragmentation Basis Coefficients

Closed-form matrix elements <k| c_i^+ c_j |l> and <k| c_i^+ c_j^+ c_m c_n |l> on the
fixed-N two-mode basis. State |k> holds N/2-k bosons in mode 1 and N/2+k in mode 2,
k = -N/2..N/2, stored in ascending order.

Every coefficient sits on a single diagonal of the (N+1)x(N+1) matrix, so each index
combination is described by an offset (l - k) and a formula in (k, l, N/2).
"""

from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np
import scipy.sparse as sp

from app.core.errors import BasisIndexError, CapacityError

Formula = Callable[[np.ndarray, np.ndarray, float], np.ndarray]

MODES = (1, 2)


def _sqrt(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.clip(x, 0.0, None))


# (i, j) -> (l - k, formula)
X_TABLE: Dict[Tuple[int, int], Tuple[int, Formula]] = {
    (1, 1): (0, lambda k, l, h: h - k),
    (2, 2): (0, lambda k, l, h: h + k),
    (1, 2): (1, lambda k, l, h: _sqrt((h - k) * (h + l))),
    (2, 1): (-1, lambda k, l, h: _sqrt((h - l) * (h + k))),
}


def _pair_number(k, l, h):
    return (h - k) * (h + k)


def _y1112(k, l, h):
    return (h - l) * _sqrt((h - k) * (h + l))


def _y1222(k, l, h):
    return (h + k) * _sqrt((h - k) * (h + l))


def _y1211(k, l, h):
    return (h - k) * _sqrt((h - l) * (h + k))


def _y2212(k, l, h):
    return (h + l) * _sqrt((h - l) * (h + k))


# (i, j, m, n) -> (l - k, formula)
Y_TABLE: Dict[Tuple[int, int, int, int], Tuple[int, Formula]] = {
    (1, 1, 1, 1): (0, lambda k, l, h: (h - k) * (h - k - 1)),
    (2, 2, 2, 2): (0, lambda k, l, h: (h + k) * (h + k - 1)),
    (1, 2, 1, 2): (0, _pair_number),
    (1, 2, 2, 1): (0, _pair_number),
    (2, 1, 1, 2): (0, _pair_number),
    (2, 1, 2, 1): (0, _pair_number),
    (1, 1, 1, 2): (1, _y1112),
    (1, 1, 2, 1): (1, _y1112),
    (1, 2, 2, 2): (1, _y1222),
    (2, 1, 2, 2): (1, _y1222),
    (1, 2, 1, 1): (-1, _y1211),
    (2, 1, 1, 1): (-1, _y1211),
    (2, 2, 1, 2): (-1, _y2212),
    (2, 2, 2, 1): (-1, _y2212),
    (1, 1, 2, 2): (2, lambda k, l, h: _sqrt((h - l + 1) * (h - k) * (h + l) * (h + k + 1))),
    (2, 2, 1, 1): (-2, lambda k, l, h: _sqrt((h - k + 1) * (h - l) * (h + k) * (h + l + 1))),
}


@dataclass(frozen=True)
class FragBasis:
    """Fixed-N two-mode basis, k ascending"""

    n_bosons: int

    def __post_init__(self) -> None:
        check_boson_count(self.n_bosons)

    @property
    def j(self) -> float:
        return self.n_bosons / 2

    @property
    def dim(self) -> int:
        return self.n_bosons + 1

    @property
    def k_range(self) -> np.ndarray:
        h = self.n_bosons // 2
        return np.arange(-h, h + 1)

    def index(self, k: int) -> int:
        check_frag_index(k, self.n_bosons)
        return int(k) + self.n_bosons // 2

    def occupations(self, k: int) -> Tuple[int, int]:
        """(bosons in mode 1, bosons in mode 2) of state |k>"""
        check_frag_index(k, self.n_bosons)
        h = self.n_bosons // 2
        return h - int(k), h + int(k)


def check_boson_count(n_bosons: int) -> None:
    if isinstance(n_bosons, bool) or int(n_bosons) != n_bosons:
        raise BasisIndexError("Boson count must be an integer", details={"N": n_bosons})
    if n_bosons < 2 or n_bosons % 2:
        raise BasisIndexError(
            "Boson count must be even and positive", details={"N": n_bosons}
        )


def check_mode_index(i: int) -> None:
    if i not in MODES:
        raise BasisIndexError("Mode index must be 1 or 2", details={"mode": i})


def check_frag_index(k: int, n_bosons: int) -> None:
    h = n_bosons // 2
    if int(k) != k or not -h <= k <= h:
        raise BasisIndexError(
            "Fragmentation index outside [-N/2, N/2]", details={"k": k, "N": n_bosons}
        )


def check_cap(n_bosons: int, cap: int) -> None:
    if n_bosons > cap:
        raise CapacityError(
            "Boson count exceeds the configured cap",
            details={"N": n_bosons, "cap": cap},
        )


def _value(entry: Tuple[int, Formula], k: int, l: int, n_bosons: int) -> float:
    offset, formula = entry
    if l - k != offset:
        return 0.0
    return float(formula(np.float64(k), np.float64(l), n_bosons / 2))


def x_coeff(i: int, j: int, k: int, l: int, n_bosons: int) -> float:
    """X^{ij}_{kl} = <k| c_i^+ c_j |l>"""
    check_boson_count(n_bosons)
    check_mode_index(i)
    check_mode_index(j)
    check_frag_index(k, n_bosons)
    check_frag_index(l, n_bosons)
    return _value(X_TABLE[(i, j)], k, l, n_bosons)


def y_coeff(i: int, j: int, m: int, n: int, k: int, l: int, n_bosons: int) -> float:
    """Y^{ij mn}_{kl} = <k| c_i^+ c_j^+ c_m c_n |l>"""
    check_boson_count(n_bosons)
    for mode in (i, j, m, n):
        check_mode_index(mode)
    check_frag_index(k, n_bosons)
    check_frag_index(l, n_bosons)
    return _value(Y_TABLE[(i, j, m, n)], k, l, n_bosons)


def _band(entry: Tuple[int, Formula], n_bosons: int) -> sp.dia_matrix:
    offset, formula = entry
    h = n_bosons // 2
    dim = n_bosons + 1
    k = np.arange(-h, h + 1, dtype=np.float64)
    if offset >= 0:
        rows = k[: dim - offset]
    else:
        rows = k[-offset:]
    values = formula(rows, rows + offset, float(h))
    return sp.diags(np.asarray(values, dtype=np.float64), offset, shape=(dim, dim), format="dia")


def x_matrix(i: int, j: int, n_bosons: int) -> sp.dia_matrix:
    """Sparse (N+1)x(N+1) matrix of X^{ij}_{kl}"""
    check_boson_count(n_bosons)
    check_mode_index(i)
    check_mode_index(j)
    return _band(X_TABLE[(i, j)], n_bosons)


def y_matrix(i: int, j: int, m: int, n: int, n_bosons: int) -> sp.dia_matrix:
    """Sparse (N+1)x(N+1) matrix of Y^{ij mn}_{kl}"""
    check_boson_count(n_bosons)
    for mode in (i, j, m, n):
        check_mode_index(mode)
    return _band(Y_TABLE[(i, j, m, n)], n_bosons)
