import numpy as np
import pytest

from qflab.disorder import DisorderModel, expectation, sample_hamiltonian
from qflab.errors import ParameterError
from qflab.lattice import Box


class TestSampleHamiltonian:
    def test_clean_chain_is_tridiagonal(self):
        model = DisorderModel(Box(1, 3, 1), hopping=1.0, disorder=0.0, seed=0)
        h = sample_hamiltonian(model, 0).matrix
        expected = np.array([[0, -1, 0], [-1, 0, -1], [0, -1, 0]], dtype=float)
        np.testing.assert_allclose(h, expected, atol=1e-15)

    def test_determinism(self):
        model = DisorderModel(Box(1, 16, 1), disorder=3.0, seed=123)
        h1 = sample_hamiltonian(model, 7).matrix
        h2 = sample_hamiltonian(model, 7).matrix
        assert np.array_equal(h1, h2)

    def test_distinct_samples_differ(self):
        model = DisorderModel(Box(1, 16, 1), disorder=3.0, seed=123)
        h1 = sample_hamiltonian(model, 0).matrix
        h2 = sample_hamiltonian(model, 1).matrix
        assert not np.array_equal(h1, h2)

    def test_gershgorin_spectrum_bound(self):
        model = DisorderModel(Box(1, 64, 1), hopping=1.0, disorder=4.0, seed=5)
        lam, _ = sample_hamiltonian(model, 3).eigensystem()
        assert np.abs(lam).max() <= 2.0 * 1.0 + 4.0 + 1e-12

    def test_spin_shared_potential(self):
        model = DisorderModel(Box(1, 5, 2), disorder=2.0, seed=9)
        h = sample_hamiltonian(model, 0).matrix
        diag = np.real(np.diag(h))
        # both spin components at one site carry the same potential
        np.testing.assert_allclose(diag[0::2], diag[1::2], atol=1e-15)

    def test_open_boundary_2d(self):
        model = DisorderModel(Box(2, 3, 1), disorder=0.0, seed=0)
        h = sample_hamiltonian(model, 0).matrix.real
        box = model.box
        # corner site has exactly two neighbours, centre has four
        assert np.count_nonzero(h[box.site_index((0, 0))]) == 2
        assert np.count_nonzero(h[box.site_index((1, 1))]) == 4

    def test_negative_index_rejected(self):
        model = DisorderModel(Box(1, 4, 1))
        with pytest.raises(ParameterError):
            sample_hamiltonian(model, -1)


class TestExpectation:
    def test_constant_estimator(self):
        model = DisorderModel(Box(1, 4, 1), seed=0)
        est = expectation(model, lambda op: 3.25, 16)
        assert est.mean == pytest.approx(3.25)
        assert est.stderr == pytest.approx(0.0)
        assert est.count == 16

    def test_uniform_first_moment(self):
        model = DisorderModel(Box(1, 8, 1), disorder=1.0, seed=2)
        est = expectation(model, lambda op: float(op.matrix[0, 0].real), 800)
        assert abs(est.mean) <= 3.0 * est.stderr

    def test_uniform_second_moment(self):
        model = DisorderModel(Box(1, 8, 1), disorder=1.0, seed=3)
        est = expectation(model, lambda op: float(op.matrix[0, 0].real) ** 2, 800)
        assert abs(est.mean - 1.0 / 3.0) <= 3.0 * est.stderr

    def test_thread_count_invariance(self):
        model = DisorderModel(Box(1, 12, 1), disorder=2.0, seed=4)

        def estimator(op):
            lam, _ = op.eigensystem()
            return float(lam.max())

        serial = expectation(model, estimator, 24, threads=1)
        parallel = expectation(model, estimator, 24, threads=8)
        assert serial.mean == parallel.mean
        assert serial.stderr == parallel.stderr

    def test_vector_estimator(self):
        model = DisorderModel(Box(1, 6, 1), disorder=1.0, seed=6)
        ests = expectation(model, lambda op: np.real(np.diag(op.matrix))[:3], 50)
        assert len(ests) == 3
        assert all(e.count == 50 for e in ests)

    def test_offset_gives_fresh_samples(self):
        model = DisorderModel(Box(1, 6, 1), disorder=1.0, seed=7)
        a = expectation(model, lambda op: float(op.matrix[0, 0].real), 20)
        b = expectation(model, lambda op: float(op.matrix[0, 0].real), 20, offset=20)
        assert a.mean != b.mean

    def test_failure_reports_sample_index(self):
        model = DisorderModel(Box(1, 4, 1), seed=8)

        def estimator(op):
            raise ValueError("boom")

        with pytest.raises(RuntimeError, match="sample 0"):
            expectation(model, estimator, 4)

    def test_minimum_samples(self):
        model = DisorderModel(Box(1, 4, 1))
        with pytest.raises(ParameterError):
            expectation(model, lambda op: 1.0, 1)
