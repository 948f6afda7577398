"""Density-operator classification, isospectrality, orbit sampling."""

import numpy as np
import pytest
import scipy.stats

from qlyap import states


def diag_state(*w):
    return np.diag(np.asarray(w, dtype=float)).astype(complex)


class TestClassify:
    def test_pure(self):
        c = states.classify(diag_state(0.0, 1.0, 0.0))
        assert c.tag == "pure"
        assert c.is_pseudo_pure

    def test_generic(self):
        c = states.classify(diag_state(0.5, 0.3, 0.2))
        assert c.tag == "generic" and c.is_generic

    def test_pseudo_pure_with_values(self):
        c = states.classify(diag_state(0.6, 0.2, 0.2))
        assert c.tag == "pseudo-pure"
        assert c.values == (0.6, 0.2) and c.multiplicities == (1, 2)

    def test_intermediate(self):
        c = states.classify(diag_state(0.3, 0.3, 0.2, 0.2))
        assert c.tag == "intermediate"

    def test_two_level_mixed_is_both(self):
        c = states.classify(diag_state(0.8, 0.2))
        assert c.tag == "generic"
        assert c.is_generic and c.is_pseudo_pure

    def test_unitary_invariance(self):
        rng = np.random.default_rng(0)
        for w in ((0.6, 0.2, 0.2), (0.5, 0.3, 0.2), (1.0, 0.0, 0.0)):
            rho = diag_state(*w)
            u = states.haar_unitary(3, rng)
            assert states.classify(u @ rho @ u.conj().T).tag == states.classify(rho).tag


class TestIsospectral:
    def test_unitary_conjugation(self):
        rng = np.random.default_rng(1)
        rho = diag_state(0.5, 0.3, 0.2)
        u = states.haar_unitary(3, rng)
        assert states.is_isospectral(rho, u @ rho @ u.conj().T)

    def test_worked_example_pair(self):
        from qlyap import linalg, presets

        rho1 = linalg.rational_to_complex(linalg.rational_matrix(presets.EXAMPLE1_RHO1_EXACT))
        rho2 = linalg.rational_to_complex(linalg.rational_matrix(presets.EXAMPLE1_RHO2_EXACT))
        assert states.is_isospectral(rho1, rho2)

    def test_different_spectra(self):
        assert not states.is_isospectral(diag_state(0.5, 0.5, 0.0), diag_state(1.0, 0.0, 0.0))


class TestFlagManifoldDim:
    def test_generic_three_level(self):
        assert states.flag_manifold_dim(diag_state(0.5, 0.3, 0.2)) == 6

    def test_pure_three_level(self):
        assert states.flag_manifold_dim(diag_state(1.0, 0.0, 0.0)) == 4

    def test_completely_mixed(self):
        assert states.flag_manifold_dim(np.eye(3, dtype=complex) / 3) == 0

    def test_even_and_bounded(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            w = rng.dirichlet(np.ones(4))
            d = states.flag_manifold_dim(np.diag(w).astype(complex))
            assert d % 2 == 0 and 0 <= d <= 12


class TestValidateDensity:
    def test_accepts_valid(self):
        states.validate_density(diag_state(0.5, 0.5))

    def test_rejects_trace(self):
        with pytest.raises(ValueError, match="trace"):
            states.validate_density(diag_state(0.5, 0.6))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValueError, match="negative"):
            states.validate_density(diag_state(1.2, -0.2))

    def test_rejects_non_hermitian(self):
        m = np.array([[0.5, 0.5], [0.0, 0.5]], dtype=complex)
        with pytest.raises(ValueError, match="Hermitian"):
            states.validate_density(m)


class TestRandomIsospectral:
    def test_preserves_spectrum(self):
        ref = diag_state(0.5, 0.3, 0.2)
        for seed in range(20):
            out = states.random_isospectral(ref, seed)
            w = np.linalg.eigvalsh(out)
            np.testing.assert_allclose(np.sort(w), [0.2, 0.3, 0.5], atol=1e-10)

    def test_deterministic(self):
        ref = diag_state(0.7, 0.3)
        a = states.random_isospectral(ref, 123)
        b = states.random_isospectral(ref, 123)
        np.testing.assert_array_equal(a, b)

    def test_mean_overlap_against_brute_force(self):
        # Haar average of Tr(U rho U^dag rho) is (Tr rho)^2 / n = 1/n; check
        # the seeded sampler against both the analytic value and an
        # independent brute-force sampler (scipy unitary_group)
        ref = diag_state(0.5, 0.3, 0.2)
        ours = np.array(
            [np.trace(states.random_isospectral(ref, s) @ ref).real for s in range(1000)]
        )
        rng = np.random.default_rng(2024)
        brute = []
        for _ in range(1000):
            u = scipy.stats.unitary_group.rvs(3, random_state=rng)
            brute.append(np.trace(u @ ref @ u.conj().T @ ref).real)
        brute = np.array(brute)
        # stderr of each mean is ~5e-4; 0.004 is ~8 sigma
        assert abs(ours.mean() - 1.0 / 3.0) < 0.004
        assert abs(brute.mean() - 1.0 / 3.0) < 0.004
        assert abs(ours.mean() - brute.mean()) < 0.006
