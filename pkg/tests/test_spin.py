import numpy as np
import pytest

from app.basis.spin import ladder_coefficients, spin_matrices
from app.core.errors import BasisIndexError, CapacityError


def test_sz_for_two_bosons():
    spins = spin_matrices(2)
    assert np.array_equal(spins.sz, np.diag([-1.0, 0.0, 1.0]).astype(complex))


def test_raising_from_bottom():
    spins = spin_matrices(2)
    raised = spins.s_plus @ np.array([1, 0, 0], dtype=complex)
    assert np.allclose(raised, [0, np.sqrt(2), 0], atol=1e-14)


def test_ladder_coefficients_vanish_at_top():
    coefficients = ladder_coefficients(4)
    assert coefficients.shape == (4,)
    assert coefficients[0] == pytest.approx(2.0)  # k = -2 -> sqrt(6 - 2)
    assert coefficients[-1] == pytest.approx(2.0)


@pytest.mark.parametrize("n_bosons", [2, 4, 6, 8])
def test_commutation_relations(n_bosons):
    spins = spin_matrices(n_bosons)
    commutator = spins.sx @ spins.sy - spins.sy @ spins.sx
    assert np.abs(commutator - 1j * spins.sz).max() < 1e-12


@pytest.mark.parametrize("n_bosons", [2, 4, 6, 8])
def test_casimir(n_bosons):
    j = n_bosons / 2
    spins = spin_matrices(n_bosons)
    assert np.abs(spins.casimir - j * (j + 1) * np.eye(n_bosons + 1)).max() < 1e-12


def test_hermitian():
    spins = spin_matrices(6)
    for op in (spins.sx, spins.sy, spins.sz):
        assert np.allclose(op, op.conj().T)
    assert np.allclose(spins.s_minus, spins.s_plus.conj().T)


def test_capacity(mocker):
    mocker.patch("app.basis.spin.settings.oracle_cap", 4)
    with pytest.raises(CapacityError):
        spin_matrices(6)
    assert spin_matrices(6, cap=10).sz.shape == (7, 7)


def test_odd_count():
    with pytest.raises(BasisIndexError):
        spin_matrices(3)
