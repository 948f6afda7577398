"""Drift and control Hamiltonians, and the two ideal-system conditions.

The drift Hamiltonian is diagonal in the working basis with energy levels
in decreasing order; the control Hamiltonian is off-diagonal Hermitian.
An "ideal" system has a strongly regular drift (all transition frequencies
pairwise distinct) and a fully connected control (no vanishing coupling);
both tests live here with explicit float-equality contracts.
"""

from dataclasses import dataclass

import numpy as np

from qlyap import linalg

FREQ_REL_TOL = 1e-9
COUPLING_TOL = 1e-12


def normalize_traceless(m):
    """H - (Tr H / n) I; idempotent."""
    m = np.asarray(m, dtype=np.complex128)
    n = m.shape[0]
    return m - (np.trace(m) / n) * np.eye(n)


@dataclass(frozen=True, eq=False)
class DriftHamiltonian:
    """Diagonal drift with traceless, descending energy levels."""

    levels: np.ndarray

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float)
        if lv.ndim != 1 or lv.size < 2:
            raise ValueError("drift needs a 1-d array of at least two levels")
        lv = lv - lv.mean()
        if np.any(np.diff(lv) > 0):
            raise ValueError(
                "levels must be in decreasing order; use build_operators() "
                "to sort jointly with the control couplings"
            )
        object.__setattr__(self, "levels", lv)

    @property
    def dim(self):
        return self.levels.size

    @property
    def matrix(self):
        return np.diag(self.levels).astype(np.complex128)


@dataclass(frozen=True, eq=False)
class ControlHamiltonian:
    """Hermitian coupling operator with zero diagonal."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("control Hamiltonian must be square")
        if not linalg.is_hermitian(m):
            raise ValueError("control Hamiltonian must be Hermitian")
        if np.max(np.abs(np.diag(m))) > COUPLING_TOL:
            raise ValueError("control Hamiltonian must have zero diagonal")
        m = linalg.hermitize(m)
        np.fill_diagonal(m, 0.0)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def coupling(self, k, l):
        """b_{kl} for 1-based k < l."""
        return complex(self.matrix[k - 1, l - 1])


def build_operators(levels, couplings):
    """Construct a (drift, control) pair from raw inputs.

    ``couplings`` maps 1-based index pairs (k, l), k < l, to complex
    amplitudes.  Non-descending levels are sorted here, with the same
    permutation applied to the coupling indices so the physical pairing of
    levels and transition amplitudes is preserved.  Returns
    ``(drift, control, perm)`` with ``perm`` the applied level permutation.
    """
    lv = np.asarray(levels, dtype=float)
    n = lv.size
    perm = np.argsort(-lv, kind="stable")
    lv_sorted = lv[perm]
    mat = np.zeros((n, n), dtype=np.complex128)
    inv = np.empty(n, dtype=int)
    inv[perm] = np.arange(n)
    for (k, l), b in couplings.items():
        if not (1 <= k < l <= n):
            raise ValueError(f"coupling index ({k},{l}) out of range for n={n}")
        i, j = inv[k - 1], inv[l - 1]
        mat[i, j] = b
        mat[j, i] = np.conj(b)
    return DriftHamiltonian(lv_sorted), ControlHamiltonian(mat), tuple(perm)


def transition_frequencies(h0):
    """omega_{kl} = a_l - a_k for all 1-based pairs k < l."""
    lv = h0.levels
    n = lv.size
    return {(k + 1, l + 1): float(lv[l] - lv[k]) for k in range(n - 1) for l in range(k + 1, n)}


def is_strongly_regular(h0, rel_tol=FREQ_REL_TOL):
    """True iff all transition frequencies are pairwise distinct.

    Two frequencies count as equal when |w - w'| < rel_tol * max(1, |w|).
    """
    freqs = list(transition_frequencies(h0).values())
    for i in range(len(freqs)):
        for j in range(i + 1, len(freqs)):
            if abs(freqs[i] - freqs[j]) < rel_tol * max(1.0, abs(freqs[i])):
                return False
    return True


def is_fully_connected(h1, tol=COUPLING_TOL):
    """True iff every off-diagonal coupling of the control is nonzero."""
    m = h1.matrix
    n = m.shape[0]
    for k in range(n - 1):
        for l in range(k + 1, n):
            if abs(m[k, l]) < tol:
                return False
    return True


def is_ideal(h0, h1):
    return is_strongly_regular(h0) and is_fully_connected(h1)
