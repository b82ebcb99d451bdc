import itertools

import numpy as np
import pytest

from app.basis.coefficients import (
    MODES,
    X_TABLE,
    Y_TABLE,
    FragBasis,
    x_coeff,
    x_matrix,
    y_coeff,
    y_matrix,
)
from app.core.errors import BasisIndexError


class TestFragBasis:
    def test_dimension_and_range(self):
        basis = FragBasis(6)
        assert basis.dim == 7
        assert basis.j == 3
        assert basis.k_range.tolist() == [-3, -2, -1, 0, 1, 2, 3]

    def test_occupations_and_index(self):
        basis = FragBasis(4)
        assert basis.occupations(-2) == (4, 0)
        assert basis.occupations(1) == (1, 3)
        assert basis.index(-2) == 0
        assert basis.index(2) == 4

    @pytest.mark.parametrize("n_bosons", [0, 3, 5, -2])
    def test_rejects_odd_or_nonpositive(self, n_bosons):
        with pytest.raises(BasisIndexError):
            FragBasis(n_bosons)

    def test_index_error_is_an_index_error(self):
        with pytest.raises(IndexError):
            FragBasis(4).index(3)


class TestXCoefficients:
    def test_diagonal_mode_one(self):
        assert x_coeff(1, 1, -2, -2, 4) == 4.0

    def test_selection_rule(self):
        assert x_coeff(1, 1, 0, 1, 4) == 0.0

    def test_hopping(self):
        assert x_coeff(1, 2, -1, 0, 4) == pytest.approx(np.sqrt(6), abs=1e-12)

    @pytest.mark.parametrize(
        "args",
        [(3, 1, 0, 0, 4), (1, 1, 3, 0, 4), (1, 1, 0, -3, 4), (1, 2, 0, 0, 5)],
    )
    def test_out_of_range(self, args):
        with pytest.raises(BasisIndexError):
            x_coeff(*args)

    @pytest.mark.parametrize("n_bosons", [2, 4, 6, 8])
    def test_number_sum_rule(self, n_bosons):
        total = x_matrix(1, 1, n_bosons) + x_matrix(2, 2, n_bosons)
        assert np.allclose(total.toarray(), n_bosons * np.eye(n_bosons + 1), atol=0)

    @pytest.mark.parametrize("n_bosons", [2, 6])
    def test_hermiticity(self, n_bosons):
        for i, j in itertools.product(MODES, repeat=2):
            assert np.array_equal(x_matrix(i, j, n_bosons).toarray(), x_matrix(j, i, n_bosons).toarray().T)

    def test_matrix_agrees_with_scalar(self):
        n = 6
        dense = x_matrix(2, 1, n).toarray()
        for k, l in itertools.product(range(-3, 4), repeat=2):
            assert dense[k + 3, l + 3] == pytest.approx(x_coeff(2, 1, k, l, n), abs=1e-14)

    def test_band(self):
        for (i, j), (offset, _) in X_TABLE.items():
            dense = x_matrix(i, j, 8).toarray()
            rows, cols = np.nonzero(dense)
            assert set((cols - rows).tolist()) <= {offset}


class TestYCoefficients:
    def test_diagonal_mode_one(self):
        assert y_coeff(1, 1, 1, 1, -2, -2, 4) == 12.0

    def test_double_hop(self):
        assert y_coeff(1, 1, 2, 2, -2, 0, 4) == pytest.approx(np.sqrt(24), abs=1e-12)

    def test_out_of_range_mode(self):
        with pytest.raises(BasisIndexError):
            y_coeff(1, 1, 2, 0, 0, 0, 4)

    def test_all_sixteen_combinations_tabulated(self):
        assert set(Y_TABLE) == set(itertools.product(MODES, repeat=4))

    @pytest.mark.parametrize("n_bosons", [2, 4, 8])
    def test_pair_swap_hermiticity(self, n_bosons):
        for i, j, m, n in itertools.product(MODES, repeat=4):
            a = y_matrix(i, j, m, n, n_bosons).toarray()
            b = y_matrix(m, n, i, j, n_bosons).toarray()
            assert np.allclose(a, b.T, atol=1e-12)

    @pytest.mark.parametrize("n_bosons", [4, 8])
    def test_band_width_two(self, n_bosons):
        for key in Y_TABLE:
            rows, cols = np.nonzero(y_matrix(*key, n_bosons).toarray())
            assert np.all(np.abs(cols - rows) <= 2)
