"""Propagation of the coupled feedback system and trajectory diagnostics.

The closed loop is autonomous: the state evolves under the drift plus the
scalar feedback field times the control coupling, while the target drifts
freely; the field is the gain times the trace overlap of the control
commutator with the target.  Along every solution the quadratic distance
function V is non-increasing with dV/dt = -f^2/kappa, and both spectra
are constants of motion.

The default integrator is midpoint-unitary (exact unitary conjugations,
so the spectra are preserved to machine precision and apparent
convergence can never be an artifact of numerical dissipation).  A
classical fixed-step 4th-order integrator and a real-representation
propagator are provided as independent cross-checks.
"""

import json
import math
import warnings
from dataclasses import dataclass
from itertools import permutations

import numpy as np
import scipy.linalg

from qlyap import _kernels, bloch, hamiltonians, linalg, states

FIELD_IMAG_TOL = 1e-12
DT_RESOLUTION = 1e-3  # fraction of the fastest oscillation period per step
ORBIT_SAMPLES = 2000
ORBIT_PERIODS = 50.0


@dataclass(frozen=True, eq=False)
class ControlSystem:
    """Problem instance: drift, control coupling, gain, initial target."""

    h0: hamiltonians.DriftHamiltonian
    h1: hamiltonians.ControlHamiltonian
    kappa: float
    target0: np.ndarray

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("gain kappa must be positive")
        if self.h0.dim != self.h1.dim:
            raise ValueError("drift/control dimension mismatch")
        tgt = linalg.hermitize(states.validate_density(self.target0))
        if tgt.shape[0] != self.h0.dim:
            raise ValueError("target dimension mismatch")
        tgt.flags.writeable = False
        object.__setattr__(self, "target0", tgt)

    @property
    def dim(self):
        return self.h0.dim

    @property
    def max_abs_frequency(self):
        freqs = hamiltonians.transition_frequencies(self.h0).values()
        return max(abs(w) for w in freqs)

    @property
    def default_dt(self):
        """Resolve the fastest transition by ~1/DT_RESOLUTION steps per cycle."""
        wmax = self.max_abs_frequency
        if wmax == 0.0:
            return DT_RESOLUTION
        return DT_RESOLUTION * 2.0 * math.pi / wmax

    def is_ideal(self):
        return hamiltonians.is_ideal(self.h0, self.h1)


def control_field(rho, rho_d, sys, imag_tol=FIELD_IMAG_TOL):
    """Feedback field kappa * Tr([-i H1, rho] rho_d).

    The trace is real for Hermitian inputs; an imaginary residue above
    ``imag_tol`` signals a non-Hermitian matrix upstream and raises.
    """
    rho, rho_d = linalg.check_square_pair(rho, rho_d)
    tr = np.trace((-1j) * (sys.h1.matrix @ rho - rho @ sys.h1.matrix) @ rho_d)
    if abs(tr.imag) > imag_tol * max(1.0, abs(tr.real)):
        raise ValueError(f"control field has imaginary residue {tr.imag!r}; non-Hermitian input?")
    return sys.kappa * tr.real


def lyapunov(rho, rho_d):
    """V = Tr((rho - rho_d)^2) / 2 >= 0, zero exactly at the target."""
    rho, rho_d = linalg.check_square_pair(rho, rho_d)
    d = rho - rho_d
    return 0.5 * float(np.sum(np.abs(d) ** 2))


def step(rho, rho_d, sys, dt):
    """One midpoint-unitary step of the coupled system.

    Evaluates the field at a half-step predictor, then conjugates the
    state by the exact unitary of the full step (and the target by the
    free-evolution unitary), so both spectra are preserved exactly.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    h0m = sys.h0.matrix
    h1m = sys.h1.matrix
    f0 = control_field(rho, rho_d, sys)
    ua = linalg.expm_skew(h0m + f0 * h1m, 0.5 * dt)
    u0h = linalg.expm_skew(h0m, 0.5 * dt)
    rho_h = ua @ rho @ ua.conj().T
    rhod_h = u0h @ rho_d @ u0h.conj().T
    fm = control_field(rho_h, rhod_h, sys)
    ub = linalg.expm_skew(h0m + fm * h1m, dt)
    u0 = u0h @ u0h
    rho_next = linalg.hermitize(ub @ rho @ ub.conj().T)
    rhod_next = linalg.hermitize(u0 @ rho_d @ u0.conj().T)
    return rho_next, rhod_next


@dataclass(eq=False)
class Trajectory:
    """Recorded samples of one closed-loop run plus summary inputs."""

    times: np.ndarray
    vs: np.ndarray
    fs: np.ndarray
    rhos: np.ndarray
    rhods: np.ndarray
    v_max: float
    dt: float
    record_stride: int
    kappa: float

    @property
    def n_records(self):
        return self.times.size

    def final_window(self, fraction=0.1):
        """Index slice of the trailing fraction of samples (>= 3 samples)."""
        k = max(3, int(round(self.n_records * fraction)))
        return slice(self.n_records - min(k, self.n_records), self.n_records)

    @property
    def final_v(self):
        return float(np.mean(self.vs[self.final_window()]))

    def purity(self):
        return np.einsum("tij,tji->t", self.rhos, self.rhos).real


def simulate(sys, rho0, horizon, dt=None, record_stride=1):
    """Propagate from rho0 for the given horizon; returns a Trajectory.

    The initial state should be unitarily equivalent to the target --
    warns (does not fail) otherwise, since the distance interpretation of
    V and the orbit diagnostics assume a common spectrum.
    """
    rho0 = states.validate_density(rho0)
    if rho0.shape[0] != sys.dim:
        raise ValueError("initial state dimension mismatch")
    if not states.is_isospectral(rho0, sys.target0):
        warnings.warn(
            "initial state is not isospectral to the target; the flag-manifold "
            "convergence theory does not apply",
            stacklevel=2,
        )
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if dt is None:
        dt = sys.default_dt
    if dt <= 0:
        raise ValueError("dt must be positive")
    if record_stride < 1:
        raise ValueError("record_stride must be >= 1")
    n_steps = max(1, math.ceil(horizon / dt - 1e-12))
    times, vs, fs, rhos, rhods = _kernels.propagate(
        sys.h0.matrix,
        sys.h1.matrix,
        sys.kappa,
        linalg.hermitize(rho0),
        sys.target0,
        dt,
        n_steps,
        record_stride,
    )
    return Trajectory(
        times=times,
        vs=vs,
        fs=fs,
        rhos=rhos,
        rhods=rhods,
        v_max=v_max_value(sys.target0),
        dt=dt,
        record_stride=record_stride,
        kappa=sys.kappa,
    )


def vdot_residual(traj, sys=None):
    """Worst normalized defect of the identity dV/dt = -f^2/kappa.

    Central differences of the recorded V series against the recorded
    field, max over interior samples of
    |dV/dt + f^2/kappa| / max(1, f^2/kappa).
    """
    if traj.n_records < 3:
        raise ValueError("need at least 3 recorded samples")
    kappa = traj.kappa if sys is None else sys.kappa
    t, v, f = traj.times, traj.vs, traj.fs
    dvdt = (v[2:] - v[:-2]) / (t[2:] - t[:-2])
    model = f[1:-1] ** 2 / kappa
    return float(np.max(np.abs(dvdt + model) / np.maximum(1.0, model)))


def v_max_forms(target0):
    """(max of V over the permutation states, paper's sum-of-squares form).

    The first value is the operational maximum of V on the critical set:
    max over permutations tau of V(rho^(tau), rho_d), attained at the
    complete inversion.  The second is Tr(rho_d^2), reported alongside
    because the two differ for mixed spectra.
    """
    w, _ = linalg.herm_eig(np.asarray(target0, dtype=np.complex128))
    n = w.size
    if n <= 7:
        best = max(0.5 * np.sum((np.array(p) - w) ** 2) for p in permutations(w))
    else:
        best = 0.5 * np.sum((w[::-1] - w) ** 2)
    return float(best), float(np.sum(w**2))


def v_max_value(target0):
    return v_max_forms(target0)[0]


# -- independent propagation routes ------------------------------------------


def simulate_bloch(sys, rho0, horizon, dt=None, record_stride=1, basis=None):
    """Propagate in the real representation: s' = (A0 + f A1) s with
    f = kappa * s_d^T A1 s, stepped by the same midpoint scheme with
    orthogonal exponentials (scipy expm).  Independent route used to
    cross-check the density-space propagator.

    Returns (times, S, Sd, fs, vs).
    """
    if basis is None:
        basis = bloch.build_basis(sys.dim)
    if dt is None:
        dt = sys.default_dt
    a0 = bloch.adjoint_matrix(sys.h0.matrix, basis)
    a1 = bloch.adjoint_matrix(sys.h1.matrix, basis)
    s = bloch.to_bloch(np.asarray(rho0, dtype=np.complex128), basis)
    sd = bloch.to_bloch(sys.target0, basis)
    kappa = sys.kappa
    e0h = scipy.linalg.expm(a0 * (0.5 * dt))
    e0 = scipy.linalg.expm(a0 * dt)
    n_steps = max(1, math.ceil(horizon / dt - 1e-12))
    rec = list(range(0, n_steps + 1, record_stride))
    if rec[-1] != n_steps:
        rec.append(n_steps)
    times = np.array([r * dt for r in rec])
    S = np.empty((len(rec), s.size))
    Sd = np.empty((len(rec), s.size))
    fs = np.empty(len(rec))
    vs = np.empty(len(rec))

    def record(i):
        S[i] = s
        Sd[i] = sd
        fs[i] = kappa * (sd @ (a1 @ s))
        vs[i] = 0.5 * np.dot(s - sd, s - sd)

    record(0)
    ri = 1
    for stp in range(n_steps):
        f0 = kappa * (sd @ (a1 @ s))
        sh = scipy.linalg.expm((a0 + f0 * a1) * (0.5 * dt)) @ s
        sdh = e0h @ sd
        fm = kappa * (sdh @ (a1 @ sh))
        s = scipy.linalg.expm((a0 + fm * a1) * dt) @ s
        sd = e0 @ sd
        if stp + 1 == rec[ri]:
            record(ri)
            ri += 1
    return times, S, Sd, fs, vs


def simulate_rk4(sys, rho0, horizon, dt=None, record_stride=1):
    """Classical fixed-step 4th-order integration of the coupled system.

    Does not preserve spectra (no unitary structure); kept as an
    independent cross-validation of the midpoint-unitary propagator over
    short horizons.
    """
    if dt is None:
        dt = sys.default_dt
    h0m = sys.h0.matrix
    h1m = sys.h1.matrix
    kappa = sys.kappa

    def deriv(r, rd):
        f = kappa * np.trace((-1j) * (h1m @ r - r @ h1m) @ rd).real
        h = h0m + f * h1m
        return -1j * (h @ r - r @ h), -1j * (h0m @ rd - rd @ h0m), f

    rho = np.array(rho0, dtype=np.complex128)
    rhod = sys.target0.copy()
    n_steps = max(1, math.ceil(horizon / dt - 1e-12))
    rec = list(range(0, n_steps + 1, record_stride))
    if rec[-1] != n_steps:
        rec.append(n_steps)
    times = np.array([r * dt for r in rec])
    n = sys.dim
    rhos = np.empty((len(rec), n, n), dtype=np.complex128)
    rhods = np.empty((len(rec), n, n), dtype=np.complex128)
    vs = np.empty(len(rec))
    fs = np.empty(len(rec))

    def record(i):
        rhos[i] = rho
        rhods[i] = rhod
        vs[i] = lyapunov(rho, rhod)
        fs[i] = deriv(rho, rhod)[2]

    record(0)
    ri = 1
    for stp in range(n_steps):
        k1r, k1d, _ = deriv(rho, rhod)
        k2r, k2d, _ = deriv(rho + 0.5 * dt * k1r, rhod + 0.5 * dt * k1d)
        k3r, k3d, _ = deriv(rho + 0.5 * dt * k2r, rhod + 0.5 * dt * k2d)
        k4r, k4d, _ = deriv(rho + dt * k3r, rhod + dt * k3d)
        rho = rho + (dt / 6.0) * (k1r + 2 * k2r + 2 * k3r + k4r)
        rhod = rhod + (dt / 6.0) * (k1d + 2 * k2d + 2 * k3d + k4d)
        if stp + 1 == rec[ri]:
            record(ri)
            ri += 1
    return Trajectory(
        times=times,
        vs=vs,
        fs=fs,
        rhos=rhos,
        rhods=rhods,
        v_max=v_max_value(sys.target0),
        dt=dt,
        record_stride=record_stride,
        kappa=kappa,
    )


# -- free-orbit distance ------------------------------------------------------


class FreeOrbit:
    """Sampled free orbit of the target under the drift.

    Orbits are generally not periodic for n > 2, so closure is
    approximated by sampling ORBIT_PERIODS cycles of the slowest
    transition; for n = 2 the orbit is exactly one period.  Distances are
    Hilbert-Schmidt (Euclidean in Bloch coordinates): min over the samples,
    optionally refined by a golden-section search in the orbit parameter.
    """

    def __init__(self, sys, basis=None, n_samples=ORBIT_SAMPLES, periods=ORBIT_PERIODS):
        if basis is None:
            basis = bloch.build_basis(sys.dim)
        self.basis = basis
        self.levels = sys.h0.levels
        self.target0 = sys.target0
        freqs = [abs(w) for w in hamiltonians.transition_frequencies(sys.h0).values()]
        nonzero = [w for w in freqs if w > 1e-12]
        offdiag = self.target0 - np.diag(np.diag(self.target0))
        stationary = np.max(np.abs(offdiag)) < 1e-13 or not nonzero
        if stationary:
            self.taus = np.zeros(1)
        elif sys.dim == 2:
            self.taus = np.linspace(0.0, 2.0 * math.pi / max(nonzero), n_samples, endpoint=False)
        else:
            t_orbit = periods * 2.0 * math.pi / min(nonzero)
            self.taus = np.linspace(0.0, t_orbit, n_samples, endpoint=False)
        self.samples = self._bloch_at(self.taus)
        self._sample_sq = np.einsum("md,md->m", self.samples, self.samples)
        self.spacing = self.taus[1] - self.taus[0] if self.taus.size > 1 else 0.0

    def _bloch_at(self, taus):
        # rho(tau)_kl = rho_kl exp(-i (a_k - a_l) tau), vectorized over tau
        ph = np.exp(-1j * np.outer(taus, self.levels))
        rhot = self.target0[None, :, :] * (ph[:, :, None] * ph.conj()[:, None, :])
        return np.einsum("aij,mji->ma", self.basis.elements, rhot).real

    def distances(self, s_rows, refine=True, iters=60, chunk=4096):
        """Min distance to the orbit for each Bloch row vector.

        Rows are processed in chunks so long stride-1 trajectories do not
        materialize a (rows x samples) matrix all at once.
        """
        s_rows = np.atleast_2d(np.asarray(s_rows, dtype=float))
        out = np.empty(s_rows.shape[0])
        for start in range(0, s_rows.shape[0], chunk):
            block = s_rows[start : start + chunk]
            d2 = (
                np.einsum("rd,rd->r", block, block)[:, None]
                - 2.0 * (block @ self.samples.T)
                + self._sample_sq[None, :]
            )
            best = np.argmin(d2, axis=1)
            if not refine or self.spacing == 0.0:
                vals = d2[np.arange(len(block)), best]
            else:
                lo = self.taus[best] - self.spacing
                hi = self.taus[best] + self.spacing
                vals = self._golden(block, lo, hi, iters)
            out[start : start + chunk] = np.sqrt(np.maximum(vals, 0.0))
        return out

    def _golden(self, s_rows, lo, hi, iters):
        # vectorized golden-section minimization of |s - orbit(tau)|^2
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
        invphi2 = (3.0 - math.sqrt(5.0)) / 2.0
        h = hi - lo
        x1 = lo + invphi2 * h
        x2 = lo + invphi * h
        f1 = self._dist2_at(s_rows, x1)
        f2 = self._dist2_at(s_rows, x2)
        for _ in range(iters):
            take1 = f1 < f2
            hi = np.where(take1, x2, hi)
            lo = np.where(take1, lo, x1)
            h = hi - lo
            x1n = lo + invphi2 * h
            x2n = lo + invphi * h
            f1n = self._dist2_at(s_rows, x1n)
            f2n = self._dist2_at(s_rows, x2n)
            x1, x2, f1, f2 = x1n, x2n, f1n, f2n
        return np.minimum(f1, f2)

    def _dist2_at(self, s_rows, taus):
        o = self._bloch_at(taus)
        d = s_rows - o
        return np.einsum("rd,rd->r", d, d)

    def distance_of_state(self, rho, refine=True):
        s = bloch.to_bloch(np.asarray(rho, dtype=np.complex128), self.basis)
        return float(self.distances(s[None, :], refine=refine)[0])


# -- exports ------------------------------------------------------------------

CSV_HEADER = "t,V,f,dist_target,dist_orbit,purity"


def write_trajectory_csv(traj, path, orbit=None, basis=None):
    """Write the recorded samples with derived per-sample diagnostics.

    Columns: t, V, f, dist_target (= sqrt(2V)), dist_orbit (refined
    min distance of the state to the target's free orbit; empty field when
    no orbit is supplied), purity (Tr rho^2).  Float formatting is
    shortest round-trip, so identical runs produce identical bytes.
    """
    purity = traj.purity()
    dist_target = np.sqrt(np.maximum(2.0 * traj.vs, 0.0))
    if orbit is not None:
        if basis is None:
            basis = orbit.basis
        s_rows = np.einsum("aij,tji->ta", basis.elements, traj.rhos).real
        dist_orbit = orbit.distances(s_rows)
    else:
        dist_orbit = None
    lines = [CSV_HEADER]
    for i in range(traj.n_records):
        od = "" if dist_orbit is None else repr(float(dist_orbit[i]))
        lines.append(
            ",".join(
                (
                    repr(float(traj.times[i])),
                    repr(float(traj.vs[i])),
                    repr(float(traj.fs[i])),
                    repr(float(dist_target[i])),
                    od,
                    repr(float(purity[i])),
                )
            )
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return dist_orbit


def write_snapshots_json(traj, path, stride=1):
    """JSON sidecar with full complex state snapshots every ``stride``
    recorded samples (plus the final one): fields t, rho_re, rho_im,
    rhod_re, rhod_im as row-major flat arrays."""
    idx = list(range(0, traj.n_records, stride))
    if idx[-1] != traj.n_records - 1:
        idx.append(traj.n_records - 1)
    snaps = []
    for i in idx:
        snaps.append(
            {
                "t": float(traj.times[i]),
                "rho_re": [float(x) for x in traj.rhos[i].real.ravel()],
                "rho_im": [float(x) for x in traj.rhos[i].imag.ravel()],
                "rhod_re": [float(x) for x in traj.rhods[i].real.ravel()],
                "rhod_im": [float(x) for x in traj.rhods[i].imag.ravel()],
            }
        )
    with open(path, "w") as fh:
        json.dump({"dim": traj.rhos.shape[1], "snapshots": snaps}, fh, sort_keys=True, indent=1)
        fh.write("\n")
