# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled propagation core: cyclic-Jacobi eigensolver and the
midpoint-unitary integrator for the coupled feedback system.

Mirrors ``_fallback.py`` operation for operation; the Python module is the
reference implementation, this one is the fast path (the whole stepping
loop runs without the GIL, so batch runners can use threads).
"""

import numpy as np

cimport cython
from libc.math cimport cos, fabs, isfinite, sin, sqrt

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100

NAME = "compiled"

cdef double _JTOL = 1e-14
cdef int _JSWEEPS = 100


cdef void c_set_identity(double complex[:, ::1] v, int n) noexcept nogil:
    cdef int i, j
    for i in range(n):
        for j in range(n):
            v[i, j] = 1.0 if i == j else 0.0


cdef void c_mm(double complex[:, ::1] a, double complex[:, ::1] b,
               double complex[:, ::1] out, int n) noexcept nogil:
    cdef int i, j, k
    cdef double complex acc
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(n):
                acc = acc + a[i, k] * b[k, j]
            out[i, j] = acc


cdef void c_sandwich(double complex[:, ::1] u, double complex[:, ::1] x,
                     double complex[:, ::1] tmp, double complex[:, ::1] out,
                     int n) noexcept nogil:
    # out = u x u^dagger; out must not alias x or u
    cdef int i, j, k
    cdef double complex acc
    c_mm(u, x, tmp, n)
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(n):
                acc = acc + tmp[i, k] * u[j, k].conjugate()
            out[i, j] = acc


cdef double c_field(double complex[:, ::1] h1, double complex[:, ::1] rho,
                    double complex[:, ::1] rhod, double complex[:, ::1] tmp,
                    int n) noexcept nogil:
    # Im Tr(h1 [rho, rhod]); caller applies the gain
    cdef int k, l
    cdef double complex z
    cdef double im = 0.0
    c_mm(rho, rhod, tmp, n)
    for k in range(n):
        for l in range(n):
            z = h1[k, l] * (tmp[l, k] - tmp[k, l].conjugate())
            im = im + z.imag
    return im


cdef double c_lyap(double complex[:, ::1] rho, double complex[:, ::1] rhod,
                   int n) noexcept nogil:
    cdef int i, j
    cdef double complex d
    cdef double acc = 0.0
    for i in range(n):
        for j in range(n):
            d = rho[i, j] - rhod[i, j]
            acc = acc + d.real * d.real + d.imag * d.imag
    return 0.5 * acc


cdef double c_offnorm(double complex[:, ::1] a, int n) noexcept nogil:
    cdef int i, j
    cdef double acc = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                acc = acc + a[i, j].real * a[i, j].real + a[i, j].imag * a[i, j].imag
    return sqrt(acc)


cdef int c_jacobi(double complex[:, ::1] a, double complex[:, ::1] v, int n,
                  double tol, int max_sweeps) noexcept nogil:
    # Diagonalizes Hermitian a in place, accumulating rotations into v
    # (which must start as the identity).  Returns 0 on convergence.
    cdef int sweep, p, q, k
    cdef double scale = 0.0, thresh, r, tau, t, c, s, app, aqq
    cdef double complex apq, phase, pc, xp, xq
    for p in range(n):
        for q in range(n):
            scale = scale + a[p, q].real * a[p, q].real + a[p, q].imag * a[p, q].imag
    if scale == 0.0:
        return 0
    thresh = tol * sqrt(scale)
    for sweep in range(max_sweeps):
        if c_offnorm(a, n) <= thresh:
            return 0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = sqrt(apq.real * apq.real + apq.imag * apq.imag)
                if r == 0.0:
                    continue
                phase = apq / r
                pc = phase.conjugate()
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * r)
                if tau >= 0.0:
                    t = -1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = 1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    xp = a[k, p]
                    xq = a[k, q]
                    a[k, p] = c * xp + (s * pc) * xq
                    a[k, q] = (-s * phase) * xp + c * xq
                for k in range(n):
                    xp = a[p, k]
                    xq = a[q, k]
                    a[p, k] = c * xp + (s * phase) * xq
                    a[q, k] = (-s * pc) * xp + c * xq
                a[p, p] = app + t * r
                a[q, q] = aqq - t * r
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    xp = v[k, p]
                    xq = v[k, q]
                    v[k, p] = c * xp + (s * pc) * xq
                    v[k, q] = (-s * phase) * xp + c * xq
    if c_offnorm(a, n) <= thresh:
        return 0
    return -1


cdef void c_expm_from_eig(double complex[:, ::1] v, double[::1] w, double t,
                          double complex[:, ::1] tmp, double complex[:, ::1] out,
                          int n) noexcept nogil:
    # out = v diag(exp(-i w t)) v^dagger
    cdef int i, j, k
    cdef double complex ph, acc
    for k in range(n):
        ph = cos(w[k] * t) - 1j * sin(w[k] * t)
        for i in range(n):
            tmp[i, k] = v[i, k] * ph
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(n):
                acc = acc + tmp[i, k] * v[j, k].conjugate()
            out[i, j] = acc


cdef void c_build_h(double complex[:, ::1] h0, double complex[:, ::1] h1,
                    double f, double complex[:, ::1] out, int n) noexcept nogil:
    cdef int i, j
    for i in range(n):
        for j in range(n):
            out[i, j] = h0[i, j] + f * h1[i, j]


cdef void c_hermitize_into(double complex[:, ::1] src, double complex[:, ::1] dst,
                           int n) noexcept nogil:
    cdef int i, j
    for i in range(n):
        for j in range(n):
            dst[i, j] = 0.5 * (src[i, j] + src[j, i].conjugate())


def jacobi_eigh(mat, double tol=1e-14, int max_sweeps=100):
    """Diagonalize a Hermitian matrix with cyclic Jacobi rotations.

    Returns ``(w, v)`` with eigenvalues ``w`` ascending and eigenvectors as
    the columns of ``v``.  Raises ``RuntimeError`` on non-convergence.
    """
    a = np.array(mat, dtype=np.complex128, order="C")
    cdef int n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    cdef double complex[:, ::1] av = a
    cdef double complex[:, ::1] vv = v
    cdef int status
    with nogil:
        status = c_jacobi(av, vv, n, tol, max_sweeps)
    if status != 0:
        off = np.sqrt(np.sum(np.abs(a) ** 2) - np.sum(np.abs(np.diag(a)) ** 2))
        raise RuntimeError(
            "jacobi_eigh did not converge in %d sweeps "
            "(off-diagonal norm %.3e)" % (max_sweeps, off)
        )
    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def expm_minus_ih(h, t):
    """exp(-i h t) for Hermitian h, via the Jacobi eigendecomposition."""
    w, v = jacobi_eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def propagate(h0, h1, kappa, rho0, rhod0, double dt, int n_steps,
              int record_stride=1):
    """Propagate the coupled feedback system with the midpoint-unitary scheme.

    Same contract as the fallback: returns ``(times, vs, fs, rhos, rhods)``
    sampled at step 0, every ``record_stride`` steps, and the final step.
    """
    h0a = np.array(h0, dtype=np.complex128, order="C")
    h1a = np.array(h1, dtype=np.complex128, order="C")
    rho_a = np.array(rho0, dtype=np.complex128, order="C")
    rhod_a = np.array(rhod0, dtype=np.complex128, order="C")
    cdef int n = rho_a.shape[0]

    rec_list = list(range(0, n_steps + 1, record_stride))
    if rec_list[len(rec_list) - 1] != n_steps:
        rec_list.append(n_steps)
    rec_arr = np.asarray(rec_list, dtype=np.int64)
    cdef int n_rec = rec_arr.shape[0]

    times = np.empty(n_rec)
    vs = np.empty(n_rec)
    fs = np.empty(n_rec)
    rhos = np.empty((n_rec, n, n), dtype=np.complex128)
    rhods = np.empty((n_rec, n, n), dtype=np.complex128)

    u0 = np.ascontiguousarray(expm_minus_ih(h0a, dt))
    u0h = np.ascontiguousarray(expm_minus_ih(h0a, 0.5 * dt))

    work = np.empty((n, n), dtype=np.complex128)
    evec = np.empty((n, n), dtype=np.complex128)
    u = np.empty((n, n), dtype=np.complex128)
    tmp = np.empty((n, n), dtype=np.complex128)
    tmp2 = np.empty((n, n), dtype=np.complex128)
    rho_h = np.empty((n, n), dtype=np.complex128)
    rhod_h = np.empty((n, n), dtype=np.complex128)
    wbuf = np.empty(n)

    cdef double complex[:, ::1] h0v = h0a
    cdef double complex[:, ::1] h1v = h1a
    cdef double complex[:, ::1] rho = rho_a
    cdef double complex[:, ::1] rhod = rhod_a
    cdef double complex[:, ::1] u0v = u0
    cdef double complex[:, ::1] u0hv = u0h
    cdef double complex[:, ::1] workv = work
    cdef double complex[:, ::1] evecv = evec
    cdef double complex[:, ::1] uv = u
    cdef double complex[:, ::1] tmpv = tmp
    cdef double complex[:, ::1] tmp2v = tmp2
    cdef double complex[:, ::1] rho_hv = rho_h
    cdef double complex[:, ::1] rhod_hv = rhod_h
    cdef double[::1] wv = wbuf
    cdef double[::1] times_v = times
    cdef double[::1] vs_v = vs
    cdef double[::1] fs_v = fs
    cdef double complex[:, :, ::1] rhos_v = rhos
    cdef double complex[:, :, ::1] rhods_v = rhods
    cdef long[::1] rec_v = rec_arr

    cdef double kap = kappa
    cdef double half_dt = 0.5 * dt
    cdef double f0, fm
    cdef int step, rec_idx, i, j, k, status = 0
    cdef long bad_step = 0

    with nogil:
        times_v[0] = 0.0
        vs_v[0] = c_lyap(rho, rhod, n)
        fs_v[0] = kap * c_field(h1v, rho, rhod, tmpv, n)
        for i in range(n):
            for j in range(n):
                rhos_v[0, i, j] = rho[i, j]
                rhods_v[0, i, j] = rhod[i, j]
        if not isfinite(vs_v[0]):
            status = 1
        rec_idx = 1
        if status == 0:
            for step in range(n_steps):
                f0 = kap * c_field(h1v, rho, rhod, tmpv, n)
                c_build_h(h0v, h1v, f0, workv, n)
                c_set_identity(evecv, n)
                if c_jacobi(workv, evecv, n, _JTOL, _JSWEEPS) != 0:
                    status = 2
                    bad_step = step
                    break
                for k in range(n):
                    wv[k] = workv[k, k].real
                c_expm_from_eig(evecv, wv, half_dt, tmpv, uv, n)
                c_sandwich(uv, rho, tmpv, rho_hv, n)
                c_sandwich(u0hv, rhod, tmpv, rhod_hv, n)
                fm = kap * c_field(h1v, rho_hv, rhod_hv, tmpv, n)
                c_build_h(h0v, h1v, fm, workv, n)
                c_set_identity(evecv, n)
                if c_jacobi(workv, evecv, n, _JTOL, _JSWEEPS) != 0:
                    status = 2
                    bad_step = step
                    break
                for k in range(n):
                    wv[k] = workv[k, k].real
                c_expm_from_eig(evecv, wv, dt, tmpv, uv, n)
                c_sandwich(uv, rho, tmpv, tmp2v, n)
                c_hermitize_into(tmp2v, rho, n)
                c_sandwich(u0v, rhod, tmpv, tmp2v, n)
                c_hermitize_into(tmp2v, rhod, n)
                if step + 1 == rec_v[rec_idx]:
                    times_v[rec_idx] = (step + 1) * dt
                    vs_v[rec_idx] = c_lyap(rho, rhod, n)
                    fs_v[rec_idx] = kap * c_field(h1v, rho, rhod, tmpv, n)
                    for i in range(n):
                        for j in range(n):
                            rhos_v[rec_idx, i, j] = rho[i, j]
                            rhods_v[rec_idx, i, j] = rhod[i, j]
                    if not isfinite(vs_v[rec_idx]):
                        status = 1
                        bad_step = step + 1
                        break
                    rec_idx = rec_idx + 1

    if status == 2:
        raise RuntimeError(
            "eigensolver failed to converge during propagation at step %d" % bad_step
        )
    if status == 1:
        raise RuntimeError(
            "propagation blew up at t=%g (step %d): non-finite state"
            % (bad_step * dt, bad_step)
        )
    return times, vs, fs, rhos, rhods
