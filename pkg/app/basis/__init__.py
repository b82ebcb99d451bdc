"""Fragmentation basis: closed-form coefficients, spin matrices and the Fock oracle"""

from app.basis.coefficients import FragBasis, x_coeff, x_matrix, y_coeff, y_matrix
from app.basis.oracle import FockOracle, build_fock_oracle, verify_basis
from app.basis.spin import SpinMatrices, spin_matrices

__all__ = [
    "FragBasis",
    "FockOracle",
    "SpinMatrices",
    "build_fock_oracle",
    "spin_matrices",
    "verify_basis",
    "x_coeff",
    "x_matrix",
    "y_coeff",
    "y_matrix",
]
