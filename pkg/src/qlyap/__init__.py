"""qlyap: Lyapunov feedback control of bilinear Hamiltonian quantum systems.

Simulates the coupled controlled-state / drifting-target dynamics under the
trace feedback law, and mechanically checks the convergence picture:
invariant-set membership, critical-point enumeration and hyperbolicity
classification, target-regularity determinant tests, and centre detection
for non-ideal Hamiltonians.
"""

from qlyap._kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
