import numpy as np
import pytest

from qlyap import bloch, dynamics, hamiltonians


@pytest.fixture(scope="session")
def basis2():
    return bloch.build_basis(2)


@pytest.fixture(scope="session")
def basis3():
    return bloch.build_basis(3)


@pytest.fixture(scope="session")
def sys2():
    """Two-level ideal system, tilted non-stationary target with eigs (0.8, 0.2)."""
    h0, h1, _ = hamiltonians.build_operators([0.5, -0.5], {(1, 2): 1.0})
    off = 0.3 / np.sqrt(2.0)
    target = np.array([[0.5 + off, off], [off, 0.5 - off]], dtype=complex)
    return dynamics.ControlSystem(h0, h1, 1.0, target)


@pytest.fixture(scope="session")
def sys3_ideal():
    """Ideal three-level system with generic stationary target."""
    h0, h1, _ = hamiltonians.build_operators(
        [1.2, 0.1, -1.3], {(1, 2): 1.0, (1, 3): 1.0, (2, 3): 1.0}
    )
    return dynamics.ControlSystem(h0, h1, 1.0, np.diag([0.5, 0.3, 0.2]).astype(complex))


@pytest.fixture(scope="session")
def sys3_missing():
    """Strongly regular drift, vanishing 1-3 coupling."""
    h0, h1, _ = hamiltonians.build_operators([1.2, 0.1, -1.3], {(1, 2): 1.0, (2, 3): 1.0})
    return dynamics.ControlSystem(h0, h1, 1.0, np.diag([0.5, 0.3, 0.2]).astype(complex))


@pytest.fixture(scope="session")
def sys3_degenerate():
    """Fully connected control, degenerate transition frequencies."""
    h0, h1, _ = hamiltonians.build_operators(
        [1.0, 0.0, -1.0], {(1, 2): 1.0, (1, 3): 1.0, (2, 3): 1.0}
    )
    return dynamics.ControlSystem(h0, h1, 1.0, np.diag([0.5, 0.3, 0.2]).astype(complex))


def random_hermitian(rng, n, traceless=False):
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    m = 0.5 * (m + m.conj().T)
    if traceless:
        m -= (np.trace(m) / n) * np.eye(n)
    return m
