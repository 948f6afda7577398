"""Pure-NumPy twin of the compiled propagation core.

Implements the same cyclic-Jacobi Hermitian eigensolver and the same
midpoint-unitary integrator as ``_core.pyx``, step for step.  It is the
backend of last resort (extension not built, or ``QLYAP_BACKEND=python``)
and the reference side of the backend parity tests.  Expect it to be two
to three orders of magnitude slower on the propagation loop.
"""

import numpy as np

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100

NAME = "python"


def jacobi_eigh(mat, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Diagonalize a Hermitian matrix with cyclic Jacobi rotations.

    Returns ``(w, v)`` with eigenvalues ``w`` ascending and eigenvectors as
    the columns of ``v``.  Raises ``RuntimeError`` if the off-diagonal norm
    has not dropped below ``tol * ||mat||_F`` after ``max_sweeps`` sweeps.
    """
    a = np.array(mat, dtype=np.complex128)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    scale = np.sqrt(np.sum(np.abs(a) ** 2))
    if scale == 0.0:
        return np.zeros(n), v
    thresh = tol * scale
    converged = False
    for _ in range(max_sweeps):
        if _offnorm(a) <= thresh:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                _rotate(a, v, p, q, n)
    if not converged and _offnorm(a) > thresh:
        raise RuntimeError(
            "jacobi_eigh did not converge in %d sweeps "
            "(off-diagonal norm %.3e, threshold %.3e)"
            % (max_sweeps, _offnorm(a), thresh)
        )
    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def _offnorm(a):
    # direct sum over off-diagonal moduli; the |a|^2 - |diag|^2 shortcut
    # cancels catastrophically near convergence
    off = a - np.diag(np.diag(a))
    return np.sqrt(np.sum(np.abs(off) ** 2))


def _rotate(a, v, p, q, n):
    # One Jacobi rotation zeroing a[p, q]; updates a in place and
    # accumulates the rotation into v.
    apq = a[p, q]
    r = abs(apq)
    if r == 0.0:
        return
    phase = apq / r
    pc = phase.conjugate()
    app = a[p, p].real
    aqq = a[q, q].real
    tau = (aqq - app) / (2.0 * r)
    if tau >= 0.0:
        t = -1.0 / (tau + np.sqrt(1.0 + tau * tau))
    else:
        t = 1.0 / (-tau + np.sqrt(1.0 + tau * tau))
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c

    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = c * col_p + (s * pc) * col_q
    a[:, q] = (-s * phase) * col_p + c * col_q
    row_p = a[p, :].copy()
    row_q = a[q, :].copy()
    a[p, :] = c * row_p + (s * phase) * row_q
    a[q, :] = (-s * pc) * row_p + c * row_q
    a[p, p] = app + t * r
    a[q, q] = aqq - t * r
    a[p, q] = 0.0
    a[q, p] = 0.0

    vcol_p = v[:, p].copy()
    vcol_q = v[:, q].copy()
    v[:, p] = c * vcol_p + (s * pc) * vcol_q
    v[:, q] = (-s * phase) * vcol_p + c * vcol_q


def expm_minus_ih(h, t):
    """exp(-i h t) for Hermitian h, via the Jacobi eigendecomposition."""
    w, v = jacobi_eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def _field(h1, rho, rhod, kappa):
    # kappa * Tr([-i h1, rho] rhod) = kappa * Im Tr(h1 [rho, rhod])
    m = rho @ rhod
    tr = np.sum(h1 * (m.T - m.conj()))
    return kappa * tr.imag


def _lyap(rho, rhod):
    d = rho - rhod
    return 0.5 * np.sum(np.abs(d) ** 2)


def propagate(h0, h1, kappa, rho0, rhod0, dt, n_steps, record_stride=1):
    """Propagate the coupled feedback system with the midpoint-unitary scheme.

    Per step: evaluate the field at the current state, advance a half step
    with it, re-evaluate the field there, then conjugate the state by the
    exact unitary of the full step.  The target is conjugated by the
    precomputed free-evolution unitary.  Both spectra are preserved to
    machine precision.

    Returns ``(times, vs, fs, rhos, rhods)`` sampled at step 0, every
    ``record_stride`` steps, and the final step.
    """
    h0 = np.asarray(h0, dtype=np.complex128)
    h1 = np.asarray(h1, dtype=np.complex128)
    rho = np.array(rho0, dtype=np.complex128)
    rhod = np.array(rhod0, dtype=np.complex128)
    n = rho.shape[0]

    rec_steps = list(range(0, n_steps + 1, record_stride))
    if rec_steps[-1] != n_steps:
        rec_steps.append(n_steps)
    n_rec = len(rec_steps)
    times = np.empty(n_rec)
    vs = np.empty(n_rec)
    fs = np.empty(n_rec)
    rhos = np.empty((n_rec, n, n), dtype=np.complex128)
    rhods = np.empty((n_rec, n, n), dtype=np.complex128)

    u0 = expm_minus_ih(h0, dt)
    u0h = expm_minus_ih(h0, 0.5 * dt)

    def record(idx, step):
        times[idx] = step * dt
        vs[idx] = _lyap(rho, rhod)
        fs[idx] = _field(h1, rho, rhod, kappa)
        rhos[idx] = rho
        rhods[idx] = rhod
        if not np.isfinite(vs[idx]):
            raise RuntimeError(
                "propagation blew up at t=%g (step %d): non-finite state"
                % (step * dt, step)
            )

    rec_idx = 0
    record(rec_idx, 0)
    rec_idx += 1
    for step in range(n_steps):
        f0 = _field(h1, rho, rhod, kappa)
        ua = expm_minus_ih(h0 + f0 * h1, 0.5 * dt)
        rho_h = ua @ rho @ ua.conj().T
        rhod_h = u0h @ rhod @ u0h.conj().T
        fm = _field(h1, rho_h, rhod_h, kappa)
        ub = expm_minus_ih(h0 + fm * h1, dt)
        rho = ub @ rho @ ub.conj().T
        rhod = u0 @ rhod @ u0.conj().T
        rho = 0.5 * (rho + rho.conj().T)
        rhod = 0.5 * (rhod + rhod.conj().T)
        if step + 1 == rec_steps[rec_idx]:
            record(rec_idx, step + 1)
            rec_idx += 1
    return times, vs, fs, rhos, rhods
