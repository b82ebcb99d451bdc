"""
Fock-space oracle

Brute-force mode operators on the truncated two-mode Fock space, used to validate
the closed-form coefficient tables and the spin algebra. Ladder matrices are built
from square roots of integers directly, so no factorials appear.
"""

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from app.basis.coefficients import (
    MODES,
    X_TABLE,
    Y_TABLE,
    check_boson_count,
    check_cap,
    check_mode_index,
    x_matrix,
    y_matrix,
)
from app.basis.spin import spin_matrices
from app.core.config import settings
from app.core.logging import LatencyLogger, get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class FockOracle:
    """
    Mode operators for N bosons in two modes.

    `annihilation` is the single-mode (N+1)x(N+1) ladder matrix a|n> = sqrt(n)|n-1>.
    Two-mode operators act on |n1, n2> (index n1*(N+1) + n2); `projector` selects the
    fixed-N states ordered by k ascending.
    """

    n_bosons: int
    annihilation: np.ndarray
    c1: sp.csr_matrix
    c2: sp.csr_matrix
    projector: sp.csr_matrix

    @property
    def dim(self) -> int:
        return self.n_bosons + 1

    def mode(self, i: int) -> sp.csr_matrix:
        check_mode_index(i)
        return self.c1 if i == 1 else self.c2

    def _restrict(self, op: sp.spmatrix) -> np.ndarray:
        return (self.projector @ op @ self.projector.T).toarray()

    def pair(self, i: int, j: int) -> np.ndarray:
        """<k| c_i^+ c_j |l>"""
        return self._restrict(self.mode(i).T @ self.mode(j))

    def quartic(self, i: int, j: int, m: int, n: int) -> np.ndarray:
        """<k| c_i^+ c_j^+ c_m c_n |l>"""
        return self._restrict(self.mode(i).T @ self.mode(j).T @ self.mode(m) @ self.mode(n))

    def number_operator(self) -> np.ndarray:
        return self.pair(1, 1) + self.pair(2, 2)

    def spin_operators(self) -> Dict[str, np.ndarray]:
        s_plus = self.pair(2, 1)
        s_minus = self.pair(1, 2)
        return {
            "sx": (s_plus + s_minus) / 2,
            "sy": (s_plus - s_minus) / 2j,
            "sz": (self.pair(2, 2) - self.pair(1, 1)) / 2,
        }


def build_fock_oracle(n_bosons: int, cap: Optional[int] = None) -> FockOracle:
    check_boson_count(n_bosons)
    check_cap(n_bosons, settings.oracle_cap if cap is None else cap)

    size = n_bosons + 1
    a = np.diag(np.sqrt(np.arange(1, size, dtype=np.float64)), 1)
    a_sparse = sp.csr_matrix(a)
    eye = sp.identity(size, format="csr")
    c1 = sp.kron(a_sparse, eye, format="csr")
    c2 = sp.kron(eye, a_sparse, format="csr")

    h = n_bosons // 2
    k = np.arange(-h, h + 1)
    columns = (h - k) * size + (h + k)
    projector = sp.csr_matrix(
        (np.ones(size), (np.arange(size), columns)), shape=(size, size * size)
    )
    return FockOracle(
        n_bosons=n_bosons, annihilation=a, c1=c1, c2=c2, projector=projector
    )


# oracle entries below this count as zero
ZERO_ENTRY = 1e-12


def unlisted_entries(matrix: np.ndarray, offset: int) -> int:
    """Nonzero entries off the band l - k = offset"""
    rows, cols = np.nonzero(np.abs(matrix) > ZERO_ENTRY)
    return int(np.count_nonzero(cols - rows != offset))


@dataclass
class BasisCheck:
    n_bosons: int
    max_x_error: float
    max_y_error: float
    commutator_error: float
    casimir_error: float
    nonzero_unlisted: int = 0

    def passed(self, tol: float) -> bool:
        return (
            max(self.max_x_error, self.max_y_error, self.commutator_error, self.casimir_error)
            < tol
            and self.nonzero_unlisted == 0
        )


@dataclass
class VerificationReport:
    tolerance: float
    checks: List[BasisCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed(self.tolerance) for check in self.checks)

    def as_dict(self) -> Dict:
        return {
            "tolerance": self.tolerance,
            "passed": self.passed,
            "checks": [vars(check) for check in self.checks],
        }


def check_basis(n_bosons: int) -> BasisCheck:
    """Compare every closed-form coefficient and the spin algebra against the oracle"""
    oracle = build_fock_oracle(n_bosons)
    max_x = 0.0
    unlisted = 0
    for i, j in itertools.product(MODES, repeat=2):
        expected = oracle.pair(i, j)
        diff = np.abs(x_matrix(i, j, n_bosons).toarray() - expected)
        max_x = max(max_x, float(diff.max()))
        unlisted += unlisted_entries(expected, X_TABLE[(i, j)][0])

    max_y = 0.0
    for i, j, m, n in itertools.product(MODES, repeat=4):
        expected = oracle.quartic(i, j, m, n)
        diff = np.abs(y_matrix(i, j, m, n, n_bosons).toarray() - expected)
        max_y = max(max_y, float(diff.max()))
        unlisted += unlisted_entries(expected, Y_TABLE[(i, j, m, n)][0])

    spins = spin_matrices(n_bosons)
    commutator = spins.sx @ spins.sy - spins.sy @ spins.sx - 1j * spins.sz
    j = n_bosons / 2
    casimir = spins.casimir - j * (j + 1) * np.eye(n_bosons + 1)
    return BasisCheck(
        n_bosons=n_bosons,
        max_x_error=max_x,
        max_y_error=max_y,
        commutator_error=float(np.abs(commutator).max()),
        casimir_error=float(np.abs(casimir).max()),
        nonzero_unlisted=unlisted,
    )


def verify_basis(n_values: Sequence[int], tolerance: float = 1e-12) -> VerificationReport:
    report = VerificationReport(tolerance=tolerance)
    with LatencyLogger("basis.verify", logger, n_values=list(n_values)):
        for n_bosons in n_values:
            check = check_basis(n_bosons)
            report.checks.append(check)
            logger.info(
                "basis.checked",
                N=n_bosons,
                max_x_error=check.max_x_error,
                max_y_error=check.max_y_error,
                nonzero_unlisted=check.nonzero_unlisted,
                passed=check.passed(tolerance),
            )
    return report
