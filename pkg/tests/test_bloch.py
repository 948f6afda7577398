"""Operator basis, real embedding, adjoint matrices, regularity test."""

import numpy as np
import pytest

from qlyap import bloch, linalg, states
from tests.conftest import random_hermitian


class TestBasis:
    def test_two_level_elements(self, basis2):
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
        sz = np.diag([1.0, -1.0]).astype(complex)
        np.testing.assert_allclose(basis2.elements[0], sx / np.sqrt(2), atol=1e-15)
        np.testing.assert_allclose(basis2.elements[1], sy / np.sqrt(2), atol=1e-15)
        np.testing.assert_allclose(basis2.elements[2], sz / np.sqrt(2), atol=1e-15)

    def test_counts_and_split(self, basis3):
        assert basis3.size == 8
        assert basis3.n_offdiag == 6
        # last n-1 elements are diagonal
        for e in basis3.elements[6:]:
            assert np.max(np.abs(e - np.diag(np.diag(e)))) == 0

    def test_gram_identity(self, basis3):
        gram = np.einsum("aij,bji->ab", basis3.elements, basis3.elements).real
        np.testing.assert_allclose(gram, np.eye(8), atol=1e-14)

    def test_traceless(self, basis3):
        for e in basis3.elements:
            assert abs(np.trace(e)) < 1e-15

    def test_rejects_dim_one(self):
        with pytest.raises(ValueError):
            bloch.build_basis(1)


class TestEmbedding:
    def test_completely_mixed_is_zero(self, basis3):
        s = bloch.to_bloch(np.eye(3, dtype=complex) / 3, basis3)
        assert np.max(np.abs(s)) < 1e-15

    def test_projector_component(self, basis2):
        s = bloch.to_bloch(np.diag([1.0, 0.0]).astype(complex), basis2)
        np.testing.assert_allclose(s, [0.0, 0.0, 1.0 / np.sqrt(2)], atol=1e-15)

    def test_round_trip(self, basis3):
        rng = np.random.default_rng(0)
        ref = np.diag([0.6, 0.3, 0.1]).astype(complex)
        for _ in range(100):
            rho = states.random_isospectral(ref, rng.integers(1 << 30))
            back = bloch.from_bloch(bloch.to_bloch(rho, basis3), basis3)
            assert np.max(np.abs(back - rho)) < 1e-12

    def test_from_bloch_outside_ball_not_positive(self, basis2):
        # length beyond the purity bound maps to a Hermitian non-state
        s = np.array([1.2, 0.0, 0.0])
        m = bloch.from_bloch(s, basis2)
        assert linalg.is_hermitian(m)
        assert abs(np.trace(m) - 1.0) < 1e-14
        assert np.linalg.eigvalsh(m)[0] < 0

    def test_isometry(self, basis3):
        # Tr(rho sigma) - 1/n equals the Euclidean inner product of coordinates
        rng = np.random.default_rng(1)
        ref = np.diag([0.5, 0.3, 0.2]).astype(complex)
        for _ in range(20):
            a = states.random_isospectral(ref, rng.integers(1 << 30))
            b = states.random_isospectral(ref, rng.integers(1 << 30))
            lhs = np.trace(a @ b).real - 1.0 / 3.0
            rhs = np.dot(bloch.to_bloch(a, basis3), bloch.to_bloch(b, basis3))
            assert abs(lhs - rhs) < 1e-13


class TestAdjointMatrix:
    def test_zero_hamiltonian(self, basis3):
        a = bloch.adjoint_matrix(np.zeros((3, 3), dtype=complex), basis3)
        assert np.max(np.abs(a)) == 0

    def test_two_level_rotation_rate(self, basis2):
        a = 0.45
        m = bloch.adjoint_matrix(np.diag([a, -a]).astype(complex), basis2)
        expected = np.zeros((3, 3))
        expected[0, 1] = -2 * a
        expected[1, 0] = 2 * a
        np.testing.assert_allclose(m, expected, atol=1e-15)

    def test_defining_property(self, basis3):
        rng = np.random.default_rng(2)
        ref = np.diag([0.5, 0.3, 0.2]).astype(complex)
        for _ in range(50):
            h = random_hermitian(rng, 3, traceless=True)
            rho = states.random_isospectral(ref, rng.integers(1 << 30))
            a = bloch.adjoint_matrix(h, basis3)
            lhs = bloch.to_bloch(linalg.commutator(-1j * h, rho), basis3)
            np.testing.assert_allclose(lhs, a @ bloch.to_bloch(rho, basis3), atol=1e-12)

    def test_antisymmetric_and_orthogonal_exponential(self, basis3):
        import scipy.linalg

        rng = np.random.default_rng(3)
        h = random_hermitian(rng, 3, traceless=True)
        a = bloch.adjoint_matrix(h, basis3)
        assert np.max(np.abs(a + a.T)) < 1e-12
        o = scipy.linalg.expm(a * 0.83)
        assert np.linalg.norm(o @ o.T - np.eye(8)) < 1e-12

    def test_rejects_traceful(self, basis3):
        with pytest.raises(ValueError, match="traceless"):
            bloch.adjoint_matrix(np.eye(3, dtype=complex), basis3)


class TestTargetRegularity:
    def test_completely_mixed_degenerate(self, basis3):
        reg = bloch.target_regularity(np.eye(3, dtype=complex) / 3, basis3)
        assert reg.det_tilde == 0.0
        assert not reg.is_regular

    def test_generic_diagonal(self, basis3):
        reg = bloch.target_regularity(np.diag([0.5, 0.3, 0.2]).astype(complex), basis3)
        assert not reg.has_equal_diagonals
        # the map block-diagonalizes over index pairs: det = prod (w_k - w_l)^2
        np.testing.assert_allclose(reg.det_tilde, (0.2 * 0.3 * 0.1) ** 2, rtol=1e-10)
        assert reg.is_regular

    def test_equal_diagonals_flagged(self, basis3):
        reg = bloch.target_regularity(np.diag([0.4, 0.4, 0.2]).astype(complex), basis3)
        assert reg.has_equal_diagonals and not reg.is_regular

    def test_diagonal_block_factorization(self, basis3):
        # brute-force oracle for a few random diagonal states
        rng = np.random.default_rng(4)
        for _ in range(5):
            w = np.sort(rng.dirichlet(np.ones(3)))[::-1]
            reg = bloch.target_regularity(np.diag(w).astype(complex), basis3)
            expected = np.prod([(w[k] - w[l]) ** 2 for k in range(3) for l in range(k + 1, 3)])
            np.testing.assert_allclose(reg.det_tilde, expected, rtol=1e-8)
