"""Generalized Gell-Mann basis and the real (Bloch/Stokes) representation.

Basis ordering is fixed project-wide and several consumers depend on it:
first the n^2 - n off-diagonal elements, pairs lexicographic by (k, l)
with the symmetric element immediately followed by the antisymmetric one,
then the n - 1 diagonal elements in ascending k.  The off-diagonal block
spans the non-Cartan subspace, the diagonal block the Cartan subspace;
the target-regularity determinant test extracts the leading
(n^2 - n) x (n^2 - n) block in exactly this ordering.
"""

from dataclasses import dataclass

import numpy as np

TRACELESS_TOL = 1e-12
DET_REL_TOL = 1e-10
DIAG_EQ_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class GellMannBasis:
    """Orthonormal traceless Hermitian basis of su(n), fixed ordering."""

    dim: int
    elements: np.ndarray  # (n^2 - 1, n, n) complex
    pairs: tuple  # 0-based (k, l) per off-diagonal pair, lexicographic

    @property
    def size(self):
        return self.dim * self.dim - 1

    @property
    def n_offdiag(self):
        """Size of the non-Cartan block (first indices)."""
        return self.dim * self.dim - self.dim

    def offdiag_index(self, k, l, anti=False):
        """Index of lambda_{kl} (or the antisymmetric partner) for 1-based k < l."""
        i = self.pairs.index((k - 1, l - 1))
        return 2 * i + (1 if anti else 0)


def build_basis(n):
    """Construct the generalized Gell-Mann basis for dimension n >= 2."""
    if n < 2:
        raise ValueError("basis needs dimension >= 2")
    pairs = [(k, l) for k in range(n - 1) for l in range(k + 1, n)]
    elems = np.zeros((n * n - 1, n, n), dtype=np.complex128)
    idx = 0
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for k, l in pairs:
        elems[idx, k, l] = inv_sqrt2
        elems[idx, l, k] = inv_sqrt2
        idx += 1
        elems[idx, k, l] = -1j * inv_sqrt2
        elems[idx, l, k] = 1j * inv_sqrt2
        idx += 1
    for k in range(1, n):
        coeff = 1.0 / np.sqrt(k * (k + 1))
        for j in range(k):
            elems[idx, j, j] = coeff
        elems[idx, k, k] = -k * coeff
        idx += 1
    elems.flags.writeable = False
    return GellMannBasis(n, elems, tuple(pairs))


def to_bloch(mat, basis):
    """Real coordinates s_i = Tr(mat lambda_i) of a Hermitian matrix.

    For a density matrix this drops the constant identity component; pair
    with ``from_bloch`` to reconstruct.
    """
    mat = np.asarray(mat, dtype=np.complex128)
    if mat.shape != (basis.dim, basis.dim):
        raise ValueError(f"dimension mismatch: {mat.shape} vs basis dim {basis.dim}")
    return np.einsum("aij,ji->a", basis.elements, mat).real


def from_bloch(s, basis, trace=1.0):
    """(trace/n) I + sum_i s_i lambda_i.

    Hermitian with the requested trace by construction; positivity is not
    guaranteed (vectors outside the state set map to non-states) and must
    be checked by the caller where it matters.
    """
    s = np.asarray(s, dtype=float)
    if s.shape != (basis.size,):
        raise ValueError(f"expected vector of length {basis.size}, got {s.shape}")
    n = basis.dim
    return (trace / n) * np.eye(n, dtype=np.complex128) + np.tensordot(
        s, basis.elements, axes=(0, 0)
    )


def adjoint_matrix(h, basis, traceless_tol=TRACELESS_TOL):
    """Real matrix of the adjoint action X -> [-iH, X] in the basis.

    Antisymmetric for Hermitian H; satisfies
    to_bloch([-iH, rho]) = A @ to_bloch(rho) for every rho.
    """
    h = np.asarray(h, dtype=np.complex128)
    if abs(np.trace(h)) > traceless_tol * max(1.0, np.max(np.abs(h))):
        raise ValueError("adjoint_matrix requires a traceless Hermitian input")
    comms = -1j * (h @ basis.elements - basis.elements @ h)
    return np.einsum("aij,bji->ab", basis.elements, comms).real


@dataclass(frozen=True)
class TargetRegularity:
    """Theorem-style regularity data for a candidate target state."""

    has_equal_diagonals: bool
    det_tilde: float
    det_threshold: float

    @property
    def is_regular(self):
        return not self.has_equal_diagonals and abs(self.det_tilde) > self.det_threshold


def target_regularity(rho_d0, basis, det_rel_tol=DET_REL_TOL, diag_tol=DIAG_EQ_TOL):
    """Degeneracy test for a target state: equal diagonal elements, or a
    vanishing determinant of the non-Cartan block of the commutator map.

    The map is X -> [rho, X] expressed in the basis (as the antisymmetric
    real matrix of -i ad_rho; the phase convention does not move the
    determinant's zero set).  The tested block is the square restriction
    to the first n^2 - n rows and columns.
    """
    rho = np.asarray(rho_d0, dtype=np.complex128)
    d = np.sort(np.diag(rho).real)
    has_equal = bool(np.any(np.diff(d) < diag_tol))
    a = adjoint_matrix(rho - (np.trace(rho) / basis.dim) * np.eye(basis.dim), basis)
    nt = basis.n_offdiag
    block = a[:nt, :nt]
    det = float(np.linalg.det(block))
    scale = float(np.max(np.abs(block)))
    threshold = det_rel_tol * scale**nt
    return TargetRegularity(has_equal, det, threshold)
