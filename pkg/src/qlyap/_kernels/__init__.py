"""Kernel backend selection.

The hot numerical paths (Hermitian Jacobi eigensolver, unitary matrix
exponential, the coupled-system stepping loop) exist twice: once compiled
(``_core``, Cython) and once in pure NumPy (``_fallback``).  The compiled
module is used when importable; set ``QLYAP_BACKEND=python`` or
``QLYAP_BACKEND=compiled`` to force a choice.  Both expose the same
functions and produce the same trajectories up to floating-point rounding.
"""

import os

from . import _fallback

try:
    from . import _core
except ImportError:
    _core = None

_forced = os.environ.get("QLYAP_BACKEND", "").strip().lower()
if _forced not in ("", "compiled", "python"):
    raise ImportError(f"QLYAP_BACKEND must be 'compiled' or 'python', got {_forced!r}")
if _forced == "compiled" and _core is None:
    raise ImportError("QLYAP_BACKEND=compiled but the extension is not built")

if _forced == "python" or _core is None:
    _impl = _fallback
else:
    _impl = _core

BACKEND = _impl.NAME
JACOBI_TOL = _impl.JACOBI_TOL
JACOBI_MAX_SWEEPS = _impl.JACOBI_MAX_SWEEPS
jacobi_eigh = _impl.jacobi_eigh
expm_minus_ih = _impl.expm_minus_ih
propagate = _impl.propagate


def available_backends():
    """Names of the importable backends ('compiled' first when built)."""
    names = []
    if _core is not None:
        names.append(_core.NAME)
    names.append(_fallback.NAME)
    return names


def get_backend(name):
    """Fetch a backend module by name, for parity tests and benchmarks."""
    if name == "python":
        return _fallback
    if name == "compiled":
        if _core is None:
            raise ValueError("compiled backend is not built")
        return _core
    raise ValueError(f"unknown backend {name!r}")
