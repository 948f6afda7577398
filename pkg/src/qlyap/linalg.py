"""Dense complex matrix kernels for small operator algebra.

Everything here acts on plain ``numpy`` arrays (no wrapper classes) sized
for Hilbert space dimensions up to ~10: commutators, iterated adjoint
actions, Hermitian eigendecomposition (cyclic Jacobi, via the selected
kernel backend) and the exact unitary exponential exp(-iHt).

``commutator_exact`` is a slow exact-rational path used where the worked
three-level example must be reproduced with zero tolerance.
"""

from fractions import Fraction

import numpy as np

from qlyap import _kernels

HERM_TOL = 1e-12


def hermitize(m):
    """Exact symmetrization (m + m^dagger)/2."""
    m = np.asarray(m, dtype=np.complex128)
    return 0.5 * (m + m.conj().T)


def is_hermitian(m, tol=HERM_TOL):
    m = np.asarray(m)
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def check_square_pair(a, b):
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected square matrix, got shape {a.shape}")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def commutator(a, b):
    """[a, b] = ab - ba."""
    a, b = check_square_pair(a, b)
    return a @ b - b @ a


def adjoint_power(h, x, m):
    """m-fold adjoint action Ad^m_{-iH}(X) = [-iH, [-iH, ... X]].

    m = 0 returns X unchanged.
    """
    h, x = check_square_pair(h, x)
    if m < 0:
        raise ValueError("adjoint power must be non-negative")
    out = x
    for _ in range(m):
        out = -1j * (h @ out - out @ h)
    return out


def herm_eig(m, tol=None, max_sweeps=None):
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(w, u)`` with eigenvalues sorted descending and the matching
    eigenvectors as columns of the unitary ``u``, so m = u diag(w) u^dagger.
    """
    m = np.asarray(m, dtype=np.complex128)
    if not is_hermitian(m):
        raise ValueError("herm_eig requires a Hermitian matrix")
    kwargs = {}
    if tol is not None:
        kwargs["tol"] = tol
    if max_sweeps is not None:
        kwargs["max_sweeps"] = max_sweeps
    w, v = _kernels.jacobi_eigh(m, **kwargs)
    return w[::-1].copy(), v[:, ::-1].copy()


def expm_skew(h, t):
    """Unitary exp(-i h t) for Hermitian h, exact through eigendecomposition."""
    h = np.asarray(h, dtype=np.complex128)
    if not is_hermitian(h):
        raise ValueError("expm_skew requires a Hermitian matrix")
    if not np.isfinite(t):
        raise ValueError("time must be finite")
    return _kernels.expm_minus_ih(h, t)


# -- exact rational-complex arithmetic ---------------------------------------
#
# Matrices are nested lists of (re, im) pairs of Fractions.  Only what the
# exact worked-example checks need: construction, commutator, comparisons.


def rational_matrix(entries):
    """Normalize nested (re, im) pairs (ints/Fractions/strings) to Fractions."""
    out = []
    for row in entries:
        out_row = []
        for entry in row:
            re, im = entry
            out_row.append((Fraction(re), Fraction(im)))
        out.append(out_row)
    return out


def commutator_exact(a, b):
    """[a, b] with exact rational complex entries (see ``rational_matrix``)."""
    n = len(a)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            re = Fraction(0)
            im = Fraction(0)
            for k in range(n):
                xr, xi = a[i][k]
                yr, yi = b[k][j]
                re += xr * yr - xi * yi
                im += xr * yi + xi * yr
                xr, xi = b[i][k]
                yr, yi = a[k][j]
                re -= xr * yr - xi * yi
                im -= xr * yi + xi * yr
            row.append((re, im))
        out.append(row)
    return out


def rational_to_complex(m):
    """Float complex ndarray from an exact rational matrix."""
    n = len(m)
    out = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            re, im = m[i][j]
            out[i, j] = float(re) + 1j * float(im)
    return out
