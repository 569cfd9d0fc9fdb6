import numpy as np
import pytest

from qflab.errors import ParameterError, ResourceLimitError, ValidationError
from qflab.pfaffian import (
    det_row_column_bound,
    determinant,
    determinant_cofactor,
    laplace_expand_determinant,
    laplace_expand_pfaffian,
    norm_product_bound,
    pf_row_sum_bound,
    pfaffian,
)


def rand_skew(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a - a.T


class TestDeterminant:
    def test_identity(self):
        assert determinant(np.eye(5)) == pytest.approx(1.0)

    def test_diagonal(self):
        assert determinant(np.diag([2.0, 3.0])) == pytest.approx(6.0)

    def test_singular_gives_zero(self):
        m = np.ones((3, 3))
        assert determinant(m) == pytest.approx(0.0, abs=1e-12)

    def test_matches_cofactor_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            n = int(rng.integers(1, 7))
            m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            direct = determinant(m)
            oracle = determinant_cofactor(m)
            assert abs(direct - oracle) <= 1e-9 * max(1.0, abs(oracle))

    def test_empty_matrix(self):
        assert determinant(np.zeros((0, 0))) == pytest.approx(1.0)


class TestPfaffian:
    def test_two_by_two(self):
        a = 2.5 - 1.25j
        m = np.array([[0, a], [-a, 0]])
        assert pfaffian(m) == pytest.approx(a)
        assert pfaffian(m, method="combinatorial") == pytest.approx(a)

    def test_block_diagonal(self):
        a, b = 1.5, -0.75 + 2j
        m = np.zeros((4, 4), dtype=complex)
        m[0, 1], m[1, 0] = a, -a
        m[2, 3], m[3, 2] = b, -b
        assert pfaffian(m) == pytest.approx(a * b)
        assert pfaffian(m, method="combinatorial") == pytest.approx(a * b)

    def test_four_by_four_closed_form(self):
        # Pf = af - be + cd for upper triangle (a,b,c,d,e,f) = 1..6
        m = np.array([
            [0.0, 1, 2, 3],
            [-1, 0, 4, 5],
            [-2, -4, 0, 6],
            [-3, -5, -6, 0],
        ])
        assert pfaffian(m) == pytest.approx(1 * 6 - 2 * 5 + 3 * 4)

    def test_methods_agree(self):
        rng = np.random.default_rng(1)
        for dim in (2, 4, 6, 8, 10):
            m = rand_skew(rng, dim)
            stable = pfaffian(m)
            comb = pfaffian(m, method="combinatorial")
            assert abs(stable - comb) <= 1e-9 * max(1.0, abs(comb))

    def test_square_is_determinant(self):
        rng = np.random.default_rng(2)
        for dim in (2, 4, 6, 8, 10, 12):
            m = rand_skew(rng, dim)
            pf = pfaffian(m)
            det = determinant(m)
            assert abs(pf**2 - det) <= 1e-8 * max(1.0, abs(det))

    def test_swap_flips_sign(self):
        rng = np.random.default_rng(3)
        m = rand_skew(rng, 8)
        base = pfaffian(m)
        swapped = m.copy()
        swapped[[2, 5], :] = swapped[[5, 2], :]
        swapped[:, [2, 5]] = swapped[:, [5, 2]]
        assert pfaffian(swapped) == pytest.approx(-base)

    def test_odd_dimension_rejected(self):
        with pytest.raises(ValidationError):
            pfaffian(np.zeros((3, 3)))

    def test_asymmetry_rejected(self):
        with pytest.raises(ValidationError):
            pfaffian(np.array([[0.0, 1.0], [1.0, 0.0]]))

    def test_combinatorial_cap(self):
        rng = np.random.default_rng(4)
        with pytest.raises(ResourceLimitError):
            pfaffian(rand_skew(rng, 12), method="combinatorial")

    def test_zero_matrix(self):
        assert pfaffian(np.zeros((4, 4))) == 0.0


class TestLaplaceExpansions:
    def test_determinant_one_by_one(self):
        rep = laplace_expand_determinant(np.array([[4.2]]), 1)
        assert rep.direct == pytest.approx(4.2)
        assert rep.max_discrepancy <= 1e-14

    def test_determinant_two_by_two(self):
        m = np.array([[1.0, 2.0], [3.0, 4.0]])
        rep = laplace_expand_determinant(m, 1, "row")
        assert list(rep.expansions.values())[0] == pytest.approx(1 * 4 - 2 * 3)

    def test_determinant_all_rows_columns(self):
        rng = np.random.default_rng(5)
        m = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        for idx in range(1, 6):
            for axis in ("row", "column"):
                rep = laplace_expand_determinant(m, idx, axis)
                assert rep.max_discrepancy <= 1e-10

    def test_pfaffian_two_by_two_base(self):
        m = np.array([[0.0, 3.5], [-3.5, 0.0]])
        rep = laplace_expand_pfaffian(m, 1)
        assert list(rep.expansions.values())[0] == pytest.approx(3.5)

    def test_pfaffian_block_every_row(self):
        a, b = 2.0, 3.0
        m = np.zeros((4, 4))
        m[0, 1], m[1, 0] = a, -a
        m[2, 3], m[3, 2] = b, -b
        for row in range(1, 5):
            rep = laplace_expand_pfaffian(m, row)
            assert list(rep.expansions.values())[0] == pytest.approx(a * b)

    def test_pfaffian_random_all_rows(self):
        rng = np.random.default_rng(6)
        m = rand_skew(rng, 6)
        for row in range(1, 7):
            rep = laplace_expand_pfaffian(m, row)
            assert rep.max_discrepancy <= 1e-9 * max(1.0, abs(rep.direct))

    def test_index_out_of_range(self):
        with pytest.raises(ParameterError):
            laplace_expand_determinant(np.eye(3), 4)
        with pytest.raises(ParameterError):
            laplace_expand_pfaffian(np.zeros((4, 4)), 0)


class TestBounds:
    def test_one_by_one(self):
        bound, ok, margin = det_row_column_bound(np.array([[3.0 - 4.0j]]))
        assert bound == pytest.approx(5.0)
        assert ok and margin == pytest.approx(0.0, abs=1e-12)

    def test_identity(self):
        bound, ok, margin = det_row_column_bound(np.eye(4))
        assert bound == pytest.approx(1.0) and ok
        assert margin == pytest.approx(0.0, abs=1e-12)

    def test_pf_row_bound_two_by_two_equality(self):
        m = np.array([[0.0, 1.5], [-1.5, 0.0]])
        bound, ok = pf_row_sum_bound(m, 1)
        assert bound == pytest.approx(1.5) and ok

    def test_pf_row_bound_zero_matrix(self):
        bound, ok = pf_row_sum_bound(np.zeros((4, 4)), 2)
        assert bound == 0.0 and ok

    def test_norm_product_ratio_scaling_invariance(self):
        rng = np.random.default_rng(7)
        m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        norms = [1.0] * 6
        _, ratio = norm_product_bound(determinant(m), norms)
        c = 1.7 - 0.4j
        scaled = m.copy()
        scaled[1, :] *= c
        norms_scaled = list(norms)
        norms_scaled[1] *= abs(c)
        _, ratio_scaled = norm_product_bound(determinant(scaled), norms_scaled)
        assert ratio_scaled == pytest.approx(ratio, rel=1e-12)

    def test_norm_product_requires_positive_norms(self):
        with pytest.raises(ParameterError):
            norm_product_bound(1.0, [1.0, 0.0])
