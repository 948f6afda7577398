"""Invariant-set membership, critical points, and stability classification.

The invariant set of the closed loop is characterized by a ladder of trace
conditions: every adjoint power of the control coupling under the drift
must be trace-orthogonal to the commutator of the state pair.  For ideal
systems (strongly regular drift, fully connected control) membership is
equivalent to that commutator being diagonal.

For a generic stationary target the invariant set consists of the n!
permutation states; each is linearized here in the real representation,
restricted to the tangent space of the isospectral orbit, and classified
by the eigenvalue real parts (sink / source / saddle / centre).  Non-ideal
systems show up as centre spectra at the target -- the mechanical
signature of a centre manifold and of the feedback law losing its grip.
"""

import warnings
from collections import Counter
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from qlyap import bloch, dynamics, linalg, states

MEMBERSHIP_TOL = 1e-10
HYPERBOLIC_TOL = 1e-7
FIELD_ZERO_TOL = 1e-10
TANGENT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class InvariantSetReport:
    """Trace-condition residuals for a state pair."""

    residuals: tuple
    is_member: bool
    commutator_diagonal: bool
    commutator_zero: bool
    m_max: int
    tol: float


def trace_conditions(rho1, rho2, sys, m_max=None, tol=MEMBERSHIP_TOL):
    """Residuals r_m = Tr([rho1, rho2] Ad^m_{-iH0}(-iH1)) for m = 0..m_max.

    All must vanish on the invariant set.  m_max defaults to n^2 - 2:
    the adjoint action lives on an (n^2 - 1)-dimensional space, so higher
    powers are linear combinations of lower ones and add no information.
    """
    rho1, rho2 = linalg.check_square_pair(rho1, rho2)
    if not states.is_isospectral(rho1, rho2):
        warnings.warn("trace conditions evaluated on a non-isospectral pair", stacklevel=2)
    n = rho1.shape[0]
    if m_max is None:
        m_max = n * n - 2
    comm = linalg.commutator(rho1, rho2)
    ad = -1j * sys.h1.matrix
    h0m = sys.h0.matrix
    residuals = []
    for _ in range(m_max + 1):
        r = np.trace(comm @ ad)
        residuals.append(float(r.real))  # product of anti-Hermitians: real trace
        ad = -1j * (h0m @ ad - ad @ h0m)
    offdiag = comm - np.diag(np.diag(comm))
    return InvariantSetReport(
        residuals=tuple(residuals),
        is_member=bool(max(abs(r) for r in residuals) < tol),
        commutator_diagonal=bool(np.max(np.abs(offdiag)) < tol),
        commutator_zero=bool(np.max(np.abs(comm)) < tol),
        m_max=m_max,
        tol=tol,
    )


def ideal_membership(rho1, rho2, sys, tol=MEMBERSHIP_TOL):
    """Membership test valid for ideal systems only: the pair is in the
    invariant set iff [rho1, rho2] is diagonal."""
    if not sys.is_ideal():
        raise ValueError(
            "ideal_membership requires a strongly regular drift and a fully "
            "connected control; use trace_conditions for non-ideal systems"
        )
    comm = linalg.commutator(rho1, rho2)
    offdiag = comm - np.diag(np.diag(comm))
    return bool(np.max(np.abs(offdiag)) < tol)


def two_level_case(rho1, rho2, basis, tol=1e-8):
    """Classify a two-level invariant-set point into the three types:
    'a' equal states, 'b' antipodal Bloch vectors, 'c' both on the equator
    (vanishing diagonal basis component); 'none' otherwise."""
    if basis.dim != 2:
        raise ValueError("two_level_case requires n = 2")
    s1 = bloch.to_bloch(np.asarray(rho1, dtype=np.complex128), basis)
    s2 = bloch.to_bloch(np.asarray(rho2, dtype=np.complex128), basis)
    if np.linalg.norm(s1 - s2) < tol:
        return "a"
    if np.linalg.norm(s1 + s2) < tol:
        return "b"
    if abs(s1[2]) < tol and abs(s2[2]) < tol:
        return "c"
    return "none"


# -- linearization ------------------------------------------------------------


def reduced_field_jacobian(s_star, sys, basis):
    """Jacobian of the reduced flow F(s) = (A0 + f(s) A1) s at a zero of f.

    With f(s) = kappa * s_d^T A1 s the derivative at f(s*) = 0 is
    A0 + kappa (A1 s*)(A1^T s_d)^T; requires a stationary target.
    """
    s_star = np.asarray(s_star, dtype=float)
    a0 = bloch.adjoint_matrix(sys.h0.matrix, basis)
    a1 = bloch.adjoint_matrix(sys.h1.matrix, basis)
    sd = bloch.to_bloch(sys.target0, basis)
    f = sys.kappa * (sd @ (a1 @ s_star))
    if abs(f) > FIELD_ZERO_TOL:
        raise ValueError(f"not a critical point: control field {f!r} is nonzero")
    return a0 + sys.kappa * np.outer(a1 @ s_star, a1.T @ sd)


def tangent_basis(rho_star, basis, rank_tol=TANGENT_RANK_TOL):
    """Orthonormal basis (columns) of the isospectral-orbit tangent space
    at rho_star, spanned by the coordinates of [-iX, rho_star] over the
    operator basis."""
    rho_star = np.asarray(rho_star, dtype=np.complex128)
    comms = -1j * (basis.elements @ rho_star - rho_star @ basis.elements)
    rows = np.einsum("aij,bji->ba", basis.elements, comms).real  # row b = coords of [-iX_b, rho*]
    u, sv, vt = np.linalg.svd(rows, full_matrices=False)
    rank = int(np.sum(sv > rank_tol * (sv[0] if sv[0] > 0 else 1.0)))
    return vt[:rank].T


def classify_spectrum(eigs, tol=HYPERBOLIC_TOL):
    """sink / source / saddle / centre / degenerate from eigenvalue real parts.

    The zero threshold is tol relative to the largest |Re| but never below
    tol itself, so exact centres are detected at any scale.
    """
    eigs = np.asarray(eigs, dtype=complex)
    if eigs.size == 0:
        return "degenerate"
    re = eigs.real
    thr = tol * max(1.0, float(np.max(np.abs(re))))
    if np.any(np.abs(re) <= thr):
        return "centre"
    if np.all(re < 0):
        return "sink"
    if np.all(re > 0):
        return "source"
    return "saddle"


@dataclass(frozen=True)
class CriticalPoint:
    """A permutation state of the target with its local linearization."""

    permutation: tuple  # 1-based images tau(1..n)
    state: np.ndarray
    v_value: float
    jacobian_spectrum: tuple  # tangent-restricted eigenvalues
    classification: str
    is_target: bool
    is_global_max: bool


def _check_stationary_generic(sys):
    tgt = sys.target0
    offdiag = tgt - np.diag(np.diag(tgt))
    if np.max(np.abs(offdiag)) > 1e-12:
        raise ValueError("critical-point enumeration requires a stationary (diagonal) target")
    if states.classify(tgt).tag not in ("generic",):
        raise ValueError("critical-point enumeration requires a generic (non-degenerate) target")


def critical_points(sys, basis=None, tol=HYPERBOLIC_TOL):
    """All n! permutation states of a generic stationary target, each with
    its tangent-restricted Jacobian spectrum and classification.

    The identity permutation (the target itself, global minimum of V) is
    first; the complete inversion (global maximum) is last and flagged.
    Requires an ideal system for the enumeration to exhaust the invariant
    set, but the linearization itself is computed for any system, which is
    exactly what the centre-detection diagnostics rely on.
    """
    _check_stationary_generic(sys)
    if basis is None:
        basis = bloch.build_basis(sys.dim)
    diag = np.diag(sys.target0).real
    n = sys.dim
    sd = bloch.to_bloch(sys.target0, basis)
    points = []
    perms = sorted(permutations(range(n)))
    inversion = tuple(range(n - 1, -1, -1))
    for perm in perms:
        vals = diag[list(perm)]
        state = np.diag(vals).astype(np.complex128)
        s_star = bloch.to_bloch(state, basis)
        jac = reduced_field_jacobian(s_star, sys, basis)
        p = tangent_basis(state, basis)
        eigs = np.linalg.eigvals(p.T @ jac @ p)
        eigs = tuple(np.sort_complex(eigs))
        points.append(
            CriticalPoint(
                permutation=tuple(i + 1 for i in perm),
                state=state,
                v_value=dynamics.lyapunov(state, sys.target0),
                jacobian_spectrum=eigs,
                classification=classify_spectrum(eigs, tol),
                is_target=perm == tuple(range(n)),
                is_global_max=perm == inversion,
            )
        )
    return points


def classify_all(sys, basis=None, tol=HYPERBOLIC_TOL):
    """Critical points plus classification counts."""
    pts = critical_points(sys, basis, tol)
    counts = Counter(p.classification for p in pts)
    return pts, dict(counts)


def target_linearization(sys, basis=None, tol=HYPERBOLIC_TOL):
    """Tangent-restricted spectrum and classification at the target itself.

    Centre classification here is the signature of a non-ideal system (a
    missing coupling or a degenerate transition-frequency gap).
    """
    if basis is None:
        basis = bloch.build_basis(sys.dim)
    s_star = bloch.to_bloch(sys.target0, basis)
    jac = reduced_field_jacobian(s_star, sys, basis)
    p = tangent_basis(sys.target0, basis)
    eigs = np.sort_complex(np.linalg.eigvals(p.T @ jac @ p))
    return eigs, classify_spectrum(eigs, tol)


# -- attraction search --------------------------------------------------------


@dataclass(frozen=True)
class TrialOutcome:
    seed: int
    v_initial: float
    v_final: float
    outcome: str  # classification string from the runner conventions


@dataclass(frozen=True)
class AttractionSearch:
    saddle_index: int
    saddle_level: float
    saddle_max_field: float
    trials: tuple

    @property
    def n_to_target(self):
        return sum(1 for t in self.trials if t.outcome == "converged_to_target")


def unstable_attraction_search(
    sys,
    k,
    trials,
    seed,
    horizon=None,
    dt=None,
    v_target_tol=1e-4,
    max_draws=200,
    jobs=1,
):
    """Witness search: initial states above the level of the k-th critical
    point that nevertheless reach the target.

    k is the 1-based index into the V-ordered critical points, restricted
    to the saddles 2 <= k <= n! - 1.  Isospectral initial states are drawn
    (seeded, rejection-sampled) with V(rho0, rho_d) above the saddle level,
    each is simulated, and outcomes are tallied.  The saddle itself is also
    propagated to confirm it is stationary (the field stays at zero).

    Trials carry independent seeds, so they can run on ``jobs`` concurrent
    workers; results are aggregated in trial order either way.
    """
    pts = critical_points(sys)
    order = np.argsort([p.v_value for p in pts], kind="stable")
    ordered = [pts[i] for i in order]
    if not 2 <= k <= len(ordered) - 1:
        raise ValueError(f"saddle index k={k} out of range 2..{len(ordered) - 1}")
    saddle = ordered[k - 1]
    level = saddle.v_value
    if horizon is None:
        horizon = 400.0

    sad_traj = dynamics.simulate(sys, saddle.state, min(horizon, 50.0), dt=dt, record_stride=1)
    saddle_max_field = float(np.max(np.abs(sad_traj.fs)))

    def one_trial(i):
        rho0 = None
        for attempt in range(max_draws):
            cand = states.random_isospectral(sys.target0, seed + 1000003 * i + attempt)
            if dynamics.lyapunov(cand, sys.target0) > level:
                rho0 = cand
                break
        if rho0 is None:
            raise RuntimeError(
                f"could not draw a state above the saddle level {level:g} "
                f"in {max_draws} attempts"
            )
        traj = dynamics.simulate(sys, rho0, horizon, dt=dt, record_stride=50)
        fv = traj.final_v
        if fv < v_target_tol:
            out = "converged_to_target"
        else:
            d = [np.linalg.norm(traj.rhos[-1] - p.state) for p in ordered[1:]]
            out = "converged_to_other_critical_point" if min(d) < 1e-3 else "non_convergent"
        return TrialOutcome(
            seed=seed + 1000003 * i,
            v_initial=float(traj.vs[0]),
            v_final=fv,
            outcome=out,
        )

    if jobs > 1 and trials > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(one_trial, range(trials)))
    else:
        outcomes = [one_trial(i) for i in range(trials)]
    return AttractionSearch(
        saddle_index=k,
        saddle_level=level,
        saddle_max_field=saddle_max_field,
        trials=tuple(outcomes),
    )
