"""Density operators: validation, spectral classification, sampling.

States are plain Hermitian ndarrays with unit trace.  Classification
clusters the spectrum into multiplicities (gap threshold distinguishes
intended degeneracies from round-off) and names the structure the
convergence theory depends on: pure, pseudo-pure (two distinct values
with multiplicities 1 and n-1), generic (n distinct values), or
intermediate.  Sampling produces Haar-uniform points of the isospectral
orbit for seeded, reproducible experiments.
"""

from dataclasses import dataclass

import numpy as np

from qlyap import linalg

TRACE_TOL = 1e-12
EIG_FLOOR = -1e-10
GAP_TOL = 1e-8
ISO_TOL = 1e-9


def validate_density(rho, trace_tol=TRACE_TOL, eig_floor=EIG_FLOOR):
    """Check Hermiticity, unit trace and positivity; raises ValueError."""
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise ValueError("density matrix has non-finite entries")
    if not linalg.is_hermitian(rho):
        raise ValueError("density matrix must be Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace {tr!r} differs from 1")
    w = np.linalg.eigvalsh(rho)
    if w[0] < eig_floor:
        raise ValueError(f"density matrix has negative eigenvalue {w[0]!r}")
    return rho


def spectrum_of(rho):
    """Eigenvalues sorted descending, tiny negatives clamped to zero."""
    w, _ = linalg.herm_eig(linalg.hermitize(rho))
    return np.where((w < 0) & (w > EIG_FLOOR), 0.0, w)


def _cluster(w, gap_tol):
    # w descending; group values whose consecutive gap is below gap_tol
    values = [w[0]]
    mults = [1]
    for x in w[1:]:
        if values[-1] - x < gap_tol:
            mults[-1] += 1
        else:
            values.append(x)
            mults.append(1)
    return values, mults


@dataclass(frozen=True)
class SpectrumClass:
    """Clustered spectrum with its structural tag."""

    tag: str  # 'pure' | 'pseudo-pure' | 'generic' | 'intermediate'
    values: tuple
    multiplicities: tuple

    @property
    def is_generic(self):
        return len(self.values) == sum(self.multiplicities)

    @property
    def is_pseudo_pure(self):
        return len(self.values) == 2 and sorted(self.multiplicities)[0] == 1 and (
            sorted(self.multiplicities)[1] == sum(self.multiplicities) - 1
        )


def classify(rho, gap_tol=GAP_TOL):
    """Spectral classification of a density matrix.

    Tag precedence: pure, then generic (n distinct eigenvalues), then
    pseudo-pure, then intermediate.  For n = 2 every state except the
    completely mixed one is both generic and pseudo-pure; the tag says
    'generic' and the booleans on the result expose both.
    """
    w = spectrum_of(rho)
    n = w.size
    values, mults = _cluster(w, gap_tol)
    if len(values) == 2 and mults == [1, n - 1] and abs(values[0] - 1.0) < gap_tol:
        tag = "pure"
    elif len(values) == n:
        tag = "generic"
    elif len(values) == 2 and (mults == [1, n - 1] or mults == [n - 1, 1]):
        tag = "pseudo-pure"
    else:
        tag = "intermediate"
    return SpectrumClass(tag, tuple(float(v) for v in values), tuple(mults))


def is_isospectral(rho1, rho2, tol=ISO_TOL):
    """True iff the sorted eigenvalue lists agree within tol."""
    rho1 = np.asarray(rho1)
    rho2 = np.asarray(rho2)
    if rho1.shape != rho2.shape:
        raise ValueError("dimension mismatch")
    w1 = np.linalg.eigvalsh(linalg.hermitize(rho1))
    w2 = np.linalg.eigvalsh(linalg.hermitize(rho2))
    return bool(np.max(np.abs(w1 - w2)) < tol)


def flag_manifold_dim(rho, gap_tol=GAP_TOL):
    """Dimension of the unitary orbit: n^2 - sum of squared multiplicities."""
    w = spectrum_of(rho)
    _, mults = _cluster(w, gap_tol)
    n = w.size
    return int(n * n - sum(m * m for m in mults))


def haar_unitary(n, rng):
    """Haar-distributed unitary (QR of a complex Ginibre matrix with the
    R-diagonal phases divided out)."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    ph = d / np.abs(d)
    return q * ph


def random_isospectral(rho_ref, seed):
    """U rho_ref U^dagger with U Haar-uniform; deterministic in the seed."""
    rho_ref = np.asarray(rho_ref, dtype=np.complex128)
    rng = np.random.default_rng(seed)
    u = haar_unitary(rho_ref.shape[0], rng)
    return linalg.hermitize(u @ rho_ref @ u.conj().T)
