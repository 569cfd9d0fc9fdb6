from math import comb

import numpy as np
import pytest

from qflab.errors import ParameterError, ResourceLimitError
from qflab.fock import (
    ANNIHILATION,
    CREATION,
    FIELD,
    DressedVector,
    OrderedMonomial,
    build_fock,
    gibbs_expectation,
    permutation_sign,
    wick_determinant_check,
    wick_pfaffian_check,
)
from qflab.hadamard import time_ordering_permutation
from qflab.operators import ComplexTime, HermitianOperator, fermi_factor


def rand_herm(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return HermitianOperator((a + a.conj().T) / 2)


def rand_unit(rng, n):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def strip_times(rng, beta, m):
    return [ComplexTime(float(rng.uniform(-2, 2)), float(rng.uniform(0, beta)))
            for _ in range(m)]


class TestConstruction:
    def test_single_mode_car(self):
        rep = build_fock(HermitianOperator(np.zeros((1, 1))))
        a = rep.lowering(0)
        np.testing.assert_allclose(a @ a.conj().T + a.conj().T @ a, np.eye(2), atol=1e-15)

    def test_car_residuals(self):
        rng = np.random.default_rng(0)
        rep = build_fock(rand_herm(rng, 3))
        for j in range(3):
            for k in range(3):
                aj, ak = rep.lowering(j), rep.lowering(k)
                assert np.abs(aj @ ak + ak @ aj).max() <= 1e-12
                mixed = aj @ ak.conj().T + ak.conj().T @ aj
                target = np.eye(8) if j == k else np.zeros((8, 8))
                assert np.abs(mixed - target).max() <= 1e-12

    def test_number_operator_spectrum(self):
        rng = np.random.default_rng(1)
        n = 4
        rep = build_fock(rand_herm(rng, n))
        num = sum(rep.lowering(k).conj().T @ rep.lowering(k) for k in range(n))
        lam = np.sort(np.linalg.eigvalsh(num))
        expected = np.sort(np.concatenate([[k] * comb(n, k) for k in range(n + 1)]))
        np.testing.assert_allclose(lam, expected, atol=1e-10)

    def test_mode_cap(self):
        with pytest.raises(ResourceLimitError):
            build_fock(HermitianOperator(np.zeros((11, 11))))

    def test_dressed_antilinearity(self):
        rng = np.random.default_rng(2)
        rep = build_fock(rand_herm(rng, 3))
        phi = rand_unit(rng, 3)
        c = 0.8 - 1.3j
        np.testing.assert_allclose(rep.annihilator(c * phi),
                                   np.conj(c) * rep.annihilator(phi), atol=1e-12)
        np.testing.assert_allclose(rep.creator(c * phi),
                                   c * rep.creator(phi), atol=1e-12)


class TestGibbsExpectation:
    def test_defining_relation(self):
        rng = np.random.default_rng(3)
        for _ in range(60):
            n = int(rng.integers(2, 5))
            op = rand_herm(rng, n)
            rep = build_fock(op)
            beta = float(rng.uniform(0.4, 2.0))
            p1, p2 = rand_unit(rng, n), rand_unit(rng, n)
            z0 = ComplexTime(0.0)
            mono = OrderedMonomial(
                (DressedVector(p1, z0, CREATION), DressedVector(p2, z0, ANNIHILATION)),
                (0, 1),
            )
            val = gibbs_expectation(rep, beta, mono)
            lam, u = op.eigensystem()
            expected = np.sum(
                np.conj(u.conj().T @ p2) * fermi_factor(lam, beta) * (u.conj().T @ p1)
            )
            assert abs(val - expected) <= 1e-10

    def test_reversed_pair_closed_form(self):
        # a(phi1) a*(phi2) against <phi1, (1 + exp(-beta H))^-1 phi2>
        rng = np.random.default_rng(4)
        for _ in range(40):
            n = int(rng.integers(2, 5))
            op = rand_herm(rng, n)
            rep = build_fock(op)
            beta = float(rng.uniform(0.4, 2.0))
            p1, p2 = rand_unit(rng, n), rand_unit(rng, n)
            z0 = ComplexTime(0.0)
            mono = OrderedMonomial(
                (DressedVector(p1, z0, ANNIHILATION), DressedVector(p2, z0, CREATION)),
                (0, 1),
            )
            val = gibbs_expectation(rep, beta, mono)
            lam, u = op.eigensystem()
            expected = np.sum(
                np.conj(u.conj().T @ p1)
                * (1.0 / (1.0 + np.exp(-beta * lam)))
                * (u.conj().T @ p2)
            )
            assert abs(val - expected) <= 1e-10

    def test_odd_monomial_vanishes(self):
        rng = np.random.default_rng(5)
        rep = build_fock(rand_herm(rng, 4))
        factors = tuple(
            DressedVector(rand_unit(rng, 4), ComplexTime(0.3 * j), CREATION)
            for j in range(3)
        )
        mono = OrderedMonomial(factors, (2, 0, 1))
        assert abs(gibbs_expectation(rep, 1.0, mono)) <= 1e-12

    def test_creation_at_bottom_scales_coefficients(self):
        # creation flavor at z = -i*beta multiplies eigencomponents by exp(beta*lam)
        lam = np.array([-0.7, 0.4])
        op = HermitianOperator(np.diag(lam))
        rep = build_fock(op)
        beta = 1.2
        phi = np.array([0.6, 0.8], dtype=complex)
        dv = DressedVector(phi, ComplexTime(0.0, beta), CREATION)
        mat = rep.evolved_factor(dv, beta)
        expected = sum(
            np.exp(beta * lam[k]) * phi[k] * rep.lowering(k).conj().T for k in range(2)
        )
        np.testing.assert_allclose(mat, expected, atol=1e-12)

    def test_field_factor_is_sum_of_flavors(self):
        rng = np.random.default_rng(6)
        rep = build_fock(rand_herm(rng, 3))
        beta = 0.9
        phi = rand_unit(rng, 3)
        z = ComplexTime(0.4, 0.3)
        fld = rep.evolved_factor(DressedVector(phi, z, FIELD), beta)
        cr = rep.evolved_factor(DressedVector(phi, z, CREATION), beta)
        an = rep.evolved_factor(DressedVector(phi, z, ANNIHILATION), beta)
        np.testing.assert_allclose(fld, cr + an, atol=1e-12)

    def test_time_outside_strip_rejected(self):
        rep = build_fock(HermitianOperator(np.zeros((2, 2))))
        dv = DressedVector(np.array([1.0, 0.0]), ComplexTime(0.0, 2.0), CREATION)
        with pytest.raises(ParameterError):
            gibbs_expectation(rep, 1.0, OrderedMonomial((dv, dv), (0, 1)))


class TestWickIdentities:
    def test_single_pair_trivial(self):
        rng = np.random.default_rng(7)
        rep = build_fock(rand_herm(rng, 3))
        beta = 1.0
        vecs = [rand_unit(rng, 3) for _ in range(2)]
        times = strip_times(rng, beta, 2)
        lhs, rhs, disc = wick_determinant_check(rep, beta, vecs, times, (0, 1))
        assert disc <= 1e-12

    def test_determinant_identity_random_permutations(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            n = int(rng.integers(2, 5))
            rep = build_fock(rand_herm(rng, n))
            beta = float(rng.uniform(0.4, 2.0))
            npairs = int(rng.integers(1, 4))
            m = 2 * npairs
            vecs = [rand_unit(rng, n) for _ in range(m)]
            times = strip_times(rng, beta, m)
            perm = tuple(int(p) for p in rng.permutation(m))
            _, rhs, disc = wick_determinant_check(rep, beta, vecs, times, perm)
            assert disc <= 1e-9 * max(1.0, abs(rhs))

    def test_determinant_identity_ordering_permutation(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            n = int(rng.integers(2, 5))
            rep = build_fock(rand_herm(rng, n))
            beta = float(rng.uniform(0.4, 2.0))
            npairs = int(rng.integers(1, 4))
            m = 2 * npairs
            vecs = [rand_unit(rng, n) for _ in range(m)]
            times = strip_times(rng, beta, m)
            perm = time_ordering_permutation(times, "determinant")
            _, rhs, disc = wick_determinant_check(rep, beta, vecs, times, perm)
            assert disc <= 1e-9 * max(1.0, abs(rhs))

    def test_determinant_identity_full_reversal(self):
        rng = np.random.default_rng(21)
        rep = build_fock(rand_herm(rng, 4))
        beta = 1.0
        m = 4
        vecs = [rand_unit(rng, 4) for _ in range(m)]
        times = strip_times(rng, beta, m)
        perm = tuple(reversed(range(m)))
        _, rhs, disc = wick_determinant_check(rep, beta, vecs, times, perm)
        assert disc <= 1e-9 * max(1.0, abs(rhs))

    def test_pfaffian_identity(self):
        rng = np.random.default_rng(10)
        for _ in range(25):
            n = int(rng.integers(2, 5))
            rep = build_fock(rand_herm(rng, n))
            beta = float(rng.uniform(0.4, 2.0))
            m = 2 * int(rng.integers(1, 4))
            vecs = [rand_unit(rng, n) for _ in range(m)]
            times = strip_times(rng, beta, m)
            perm = tuple(int(p) for p in rng.permutation(m))
            phases = [int(p) for p in rng.integers(0, 2, m)]
            _, rhs, disc = wick_pfaffian_check(rep, beta, vecs, times, perm, phases)
            assert disc <= 1e-9 * max(1.0, abs(rhs))

    def test_pfaffian_identity_step_ordering(self):
        rng = np.random.default_rng(11)
        for _ in range(15):
            rep = build_fock(rand_herm(rng, 4))
            beta = 1.0
            vecs = [rand_unit(rng, 4) for _ in range(4)]
            times = strip_times(rng, beta, 4)
            perm = time_ordering_permutation(times, "pfaffian")
            _, rhs, disc = wick_pfaffian_check(rep, beta, vecs, times, perm)
            assert disc <= 1e-9 * max(1.0, abs(rhs))


class TestOrderedMonomial:
    def test_permutation_sign(self):
        assert permutation_sign((0, 1, 2)) == 1
        assert permutation_sign((1, 0, 2)) == -1
        assert permutation_sign((2, 0, 1)) == 1

    def test_product_order(self):
        dv = DressedVector(np.array([1.0]), ComplexTime(0.0), CREATION)
        mono = OrderedMonomial((dv, dv, dv), (2, 0, 1))
        # factor j sits at slot perm[j]; factor 1 leads, then 2, then 0
        assert mono.product_order() == [1, 2, 0]

    def test_invalid_permutation(self):
        dv = DressedVector(np.array([1.0]), ComplexTime(0.0), CREATION)
        with pytest.raises(ParameterError):
            OrderedMonomial((dv, dv), (0, 0))

    def test_phase_folds_into_vector(self):
        v = np.array([1.0, 2.0], dtype=complex)
        dv = DressedVector(v, ComplexTime(0.0), FIELD, phase=1)
        np.testing.assert_allclose(dv.vector, 1j * v)
