"""Closed-loop propagation: field/V contracts, integrator quality,
conservation laws, cross-route agreement, exports."""

import json
from fractions import Fraction

import numpy as np
import pytest

from qlyap import bloch, dynamics, hamiltonians, linalg, presets, states


class TestControlField:
    def test_zero_at_target(self, sys2):
        assert dynamics.control_field(sys2.target0, sys2.target0, sys2) == 0.0

    def test_zero_for_diagonal_pair(self, sys3_ideal):
        a = np.diag([0.3, 0.5, 0.2]).astype(complex)
        assert dynamics.control_field(a, sys3_ideal.target0, sys3_ideal) == 0.0

    def test_hand_evaluated_two_level(self, sys2, basis2):
        # rho = diag(1,0), target along the antisymmetric axis with weight r:
        # working out the 2x2 commutator trace gives f = -sqrt(2) r
        r = 0.37
        rho_d = bloch.from_bloch(np.array([0.0, r, 0.0]), basis2)
        f = dynamics.control_field(np.diag([1.0, 0.0]).astype(complex), rho_d, sys2)
        assert f == pytest.approx(-np.sqrt(2.0) * r, abs=1e-14)

    def test_scales_with_kappa(self, sys2):
        sys_k = dynamics.ControlSystem(sys2.h0, sys2.h1, 2.5, sys2.target0)
        rho = states.random_isospectral(sys2.target0, 5)
        assert dynamics.control_field(rho, sys2.target0, sys_k) == pytest.approx(
            2.5 * dynamics.control_field(rho, sys2.target0, sys2)
        )

    def test_imaginary_residue_raises(self, sys2):
        bad = np.array([[0.5, 0.5], [0.0, 0.5]], dtype=complex)  # non-Hermitian
        with pytest.raises(ValueError, match="residue"):
            dynamics.control_field(bad, sys2.target0, sys2)


class TestLyapunov:
    def test_zero_at_equal(self):
        rho = np.diag([0.6, 0.4]).astype(complex)
        assert dynamics.lyapunov(rho, rho) == 0.0

    def test_antipodal_pure(self):
        assert dynamics.lyapunov(
            np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)
        ) == pytest.approx(1.0)

    def test_worked_example_rational(self):
        # exact-fraction oracle: V = Tr((rho1-rho2)^2)/2 = 11/72
        r1 = linalg.rational_matrix(presets.EXAMPLE1_RHO1_EXACT)
        r2 = linalg.rational_matrix(presets.EXAMPLE1_RHO2_EXACT)
        acc = Fraction(0)
        for i in range(3):
            for j in range(3):
                re = r1[i][j][0] - r2[i][j][0]
                im = r1[i][j][1] - r2[i][j][1]
                acc += re * re + im * im
        oracle = acc / 2
        assert oracle == Fraction(11, 72)
        rho1 = linalg.rational_to_complex(r1)
        rho2 = linalg.rational_to_complex(r2)
        assert dynamics.lyapunov(rho1, rho2) == pytest.approx(float(oracle), abs=1e-15)


class TestStep:
    def test_stationary_diagonal_pair(self, sys3_ideal):
        # everything commutes: the field stays exactly zero and the state
        # moves only by the ~1 ulp wobble of |exp(-i w dt)|^2 on the diagonal
        rho = np.diag([0.2, 0.5, 0.3]).astype(complex)
        r1, d1 = dynamics.step(rho, sys3_ideal.target0, sys3_ideal, 0.01)
        off = r1 - np.diag(np.diag(r1))
        assert np.max(np.abs(off)) == 0.0
        assert dynamics.control_field(r1, d1, sys3_ideal) == 0.0
        np.testing.assert_allclose(r1, rho, atol=5e-16)
        np.testing.assert_allclose(d1, sys3_ideal.target0, atol=5e-16)

    def test_spectra_exactly_conserved(self, sys2):
        rho = states.random_isospectral(sys2.target0, 7)
        r, d = rho, sys2.target0
        for _ in range(50):
            r, d = dynamics.step(r, d, sys2, 0.01)
        np.testing.assert_allclose(
            np.linalg.eigvalsh(r), np.linalg.eigvalsh(rho), atol=1e-13
        )
        np.testing.assert_allclose(
            np.linalg.eigvalsh(d), np.linalg.eigvalsh(sys2.target0), atol=1e-13
        )

    def test_local_order_three(self, sys2):
        # one step vs two half-steps: defect ~ C dt^3, so halving dt divides it by ~8
        rho0 = states.random_isospectral(sys2.target0, 11)
        defects = []
        for dt in (1e-2, 5e-3, 2.5e-3):
            ra, _ = dynamics.step(rho0, sys2.target0, sys2, dt)
            rb, db = dynamics.step(rho0, sys2.target0, sys2, dt / 2)
            rb, _ = dynamics.step(rb, db, sys2, dt / 2)
            defects.append(np.linalg.norm(ra - rb))
        ratios = [defects[i] / defects[i + 1] for i in range(2)]
        for r in ratios:
            assert 5.6 < r < 11.4  # local order 3 => ratio 8

    def test_matches_kernel_loop(self, sys3_ideal):
        rho0 = states.random_isospectral(sys3_ideal.target0, 13)
        r, d = rho0, sys3_ideal.target0
        for _ in range(5):
            r, d = dynamics.step(r, d, sys3_ideal, 2e-3)
        traj = dynamics.simulate(sys3_ideal, rho0, 5 * 2e-3, dt=2e-3, record_stride=5)
        assert np.max(np.abs(traj.rhos[-1] - r)) < 1e-12
        assert np.max(np.abs(traj.rhods[-1] - d)) < 1e-12


class TestSimulate:
    def test_at_target_stays(self, sys2):
        traj = dynamics.simulate(sys2, sys2.target0, 5.0, record_stride=10)
        assert np.max(np.abs(traj.vs)) < 1e-14
        assert np.max(np.abs(traj.fs)) < 1e-12

    def test_warns_non_isospectral(self, sys2):
        other = np.diag([0.6, 0.4]).astype(complex)
        with pytest.warns(UserWarning, match="isospectral"):
            dynamics.simulate(sys2, other, 0.1)

    def test_monotone_v(self, sys2, sys3_ideal, sys3_missing):
        for sysm, seed in ((sys2, 1), (sys3_ideal, 2), (sys3_missing, 3)):
            rho0 = states.random_isospectral(sysm.target0, seed)
            traj = dynamics.simulate(sysm, rho0, 20.0, record_stride=5)
            gaps = np.diff(traj.times)
            assert np.all(np.diff(traj.vs) <= 1e-8 * gaps)

    def test_spectrum_conservation(self, sys3_ideal):
        rho0 = states.random_isospectral(sys3_ideal.target0, 21)
        traj = dynamics.simulate(sys3_ideal, rho0, 100.0, record_stride=200)
        w0 = np.linalg.eigvalsh(traj.rhos[0])
        wd0 = np.linalg.eigvalsh(traj.rhods[0])
        for i in range(traj.n_records):
            assert np.max(np.abs(np.linalg.eigvalsh(traj.rhos[i]) - w0)) < 1e-10
            assert np.max(np.abs(np.linalg.eigvalsh(traj.rhods[i]) - wd0)) < 1e-10

    def test_gauge_consistency(self, sys2):
        # H1 -> c H1 with kappa -> kappa/c^2 leaves f*H1 and the trajectory invariant
        c = 3.0
        h1_scaled = hamiltonians.ControlHamiltonian(c * sys2.h1.matrix)
        sys_scaled = dynamics.ControlSystem(sys2.h0, h1_scaled, sys2.kappa / c**2, sys2.target0)
        rho0 = states.random_isospectral(sys2.target0, 17)
        t1 = dynamics.simulate(sys2, rho0, 10.0, dt=2e-3, record_stride=100)
        t2 = dynamics.simulate(sys_scaled, rho0, 10.0, dt=2e-3, record_stride=100)
        assert np.max(np.abs(t1.rhos - t2.rhos)) < 1e-9
        np.testing.assert_allclose(t1.fs, c * t2.fs, atol=1e-9)


class TestVdotResidual:
    def test_zero_on_stationary(self, sys3_ideal):
        traj = dynamics.simulate(sys3_ideal, sys3_ideal.target0, 1.0, dt=1e-3, record_stride=1)
        assert dynamics.vdot_residual(traj) < 1e-14

    def test_small_at_reference_step(self, sys2):
        rho0 = states.random_isospectral(sys2.target0, 19)
        traj = dynamics.simulate(sys2, rho0, 10.0, dt=1e-3, record_stride=1)
        assert dynamics.vdot_residual(traj) < 1e-5

    def test_second_order_in_dt(self, sys2):
        rho0 = states.random_isospectral(sys2.target0, 19)
        res = []
        for dt in (2e-3, 1e-3):
            traj = dynamics.simulate(sys2, rho0, 5.0, dt=dt, record_stride=1)
            res.append(dynamics.vdot_residual(traj))
        assert 2.5 < res[0] / res[1] < 6.0

    def test_needs_three_samples(self, sys2):
        traj = dynamics.simulate(sys2, sys2.target0, 2e-3, dt=1e-3, record_stride=2)
        with pytest.raises(ValueError):
            dynamics.vdot_residual(traj)


class TestVMax:
    def test_two_level_computed_form(self):
        # permutation distance at the inversion: (w1-w2)^2, not sum w^2
        v, paper = dynamics.v_max_forms(np.diag([0.8, 0.2]).astype(complex))
        assert v == pytest.approx(0.36)
        assert paper == pytest.approx(0.68)

    def test_three_level(self):
        v, paper = dynamics.v_max_forms(np.diag([0.5, 0.3, 0.2]).astype(complex))
        assert v == pytest.approx(0.09)
        assert paper == pytest.approx(0.38)

    def test_pure_state_forms_agree(self):
        v, paper = dynamics.v_max_forms(np.diag([1.0, 0.0, 0.0]).astype(complex))
        assert v == pytest.approx(1.0) and paper == pytest.approx(1.0)


class TestCrossRoutes:
    def test_bloch_route_matches_density(self, sys3_ideal, basis3):
        rho0 = states.random_isospectral(sys3_ideal.target0, 23)
        tb, S, Sd, fb, vb = dynamics.simulate_bloch(
            sys3_ideal, rho0, 10.0, record_stride=20, basis=basis3
        )
        traj = dynamics.simulate(sys3_ideal, rho0, 10.0, record_stride=20)
        s_dens = np.einsum("aij,tji->ta", basis3.elements, traj.rhos).real
        sd_dens = np.einsum("aij,tji->ta", basis3.elements, traj.rhods).real
        np.testing.assert_array_equal(tb, traj.times)
        assert np.max(np.abs(S - s_dens)) < 1e-8
        assert np.max(np.abs(Sd - sd_dens)) < 1e-8
        np.testing.assert_allclose(vb, traj.vs, atol=1e-8)

    def test_rk4_route_matches(self, sys2):
        rho0 = states.random_isospectral(sys2.target0, 29)
        a = dynamics.simulate(sys2, rho0, 2.0, dt=1e-3, record_stride=200)
        b = dynamics.simulate_rk4(sys2, rho0, 2.0, dt=1e-3, record_stride=200)
        assert np.max(np.abs(a.rhos[-1] - b.rhos[-1])) < 1e-7


class TestFreeOrbit:
    def test_point_on_orbit_distance_tiny(self, sys2, basis2):
        orbit = dynamics.FreeOrbit(sys2, basis2)
        u = linalg.expm_skew(sys2.h0.matrix, 1.234)
        on_orbit = u @ sys2.target0 @ u.conj().T
        assert orbit.distance_of_state(on_orbit) < 1e-9

    def test_stationary_target_orbit_is_point(self, sys3_ideal, basis3):
        orbit = dynamics.FreeOrbit(sys3_ideal, basis3)
        rho = states.random_isospectral(sys3_ideal.target0, 31)
        d = orbit.distance_of_state(rho)
        assert d == pytest.approx(np.linalg.norm(rho - sys3_ideal.target0), abs=1e-12)

    def test_off_orbit_distance_positive(self, sys2, basis2):
        orbit = dynamics.FreeOrbit(sys2, basis2)
        anti = bloch.from_bloch(-bloch.to_bloch(sys2.target0, basis2), basis2)
        assert orbit.distance_of_state(anti) > 0.1


class TestExports:
    def test_csv_schema_and_determinism(self, sys2, basis2, tmp_path):
        rho0 = states.random_isospectral(sys2.target0, 37)
        traj = dynamics.simulate(sys2, rho0, 1.0, dt=2e-3, record_stride=10)
        orbit = dynamics.FreeOrbit(sys2, basis2)
        p1 = tmp_path / "a.csv"
        p2 = tmp_path / "b.csv"
        dynamics.write_trajectory_csv(traj, p1, orbit, basis2)
        dynamics.write_trajectory_csv(traj, p2, orbit, basis2)
        text = p1.read_text()
        assert text.splitlines()[0] == "t,V,f,dist_target,dist_orbit,purity"
        assert text == p2.read_text()
        row = text.splitlines()[1].split(",")
        assert float(row[0]) == 0.0
        assert float(row[3]) == pytest.approx(np.sqrt(2 * traj.vs[0]))
        assert float(row[5]) == pytest.approx(np.trace(rho0 @ rho0).real)

    def test_snapshot_sidecar_round_trip(self, sys2, tmp_path):
        rho0 = states.random_isospectral(sys2.target0, 41)
        traj = dynamics.simulate(sys2, rho0, 0.5, dt=2e-3, record_stride=10)
        path = tmp_path / "snaps.json"
        dynamics.write_snapshots_json(traj, path, stride=5)
        data = json.loads(path.read_text())
        assert data["dim"] == 2
        first = data["snapshots"][0]
        rho = np.array(first["rho_re"]).reshape(2, 2) + 1j * np.array(first["rho_im"]).reshape(2, 2)
        np.testing.assert_allclose(rho, traj.rhos[0], atol=1e-15)
        assert data["snapshots"][-1]["t"] == pytest.approx(traj.times[-1])
