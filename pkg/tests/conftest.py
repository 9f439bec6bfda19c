"""Pytest configuration and fixtures for fisherplus tests."""

import tempfile
from typing import Generator, List

import numpy as np
import pytest

from fisherplus.quantum import HermitianOperator, ProjectiveBasis, QuantumState
from fisherplus.verify import RandomInstance, random_basis, random_generator, random_mixed_state, random_pure_state

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@pytest.fixture
def temp_dir() -> Generator[str, None, None]:
    """Create a temporary directory for testing."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield tmpdir


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded random number generator."""
    return np.random.default_rng(20240611)


@pytest.fixture
def plus_state() -> QuantumState:
    """The qubit state |+> = (|0> + |1>)/sqrt(2)."""
    return QuantumState.pure(np.array([1.0, 1.0]) / np.sqrt(2))


@pytest.fixture
def sigma_z_half() -> HermitianOperator:
    """Qubit phase generator sigma_z / 2."""
    return HermitianOperator(SIGMA_Z / 2)


@pytest.fixture
def sigma_x_basis() -> ProjectiveBasis:
    """Eigenbasis of sigma_x, labeled +1 and -1."""
    return ProjectiveBasis.from_unitary(np.array([[1, 1], [1, -1]]) / np.sqrt(2), (1, -1))


@pytest.fixture
def computational_basis() -> ProjectiveBasis:
    """Qubit basis |0>, |1>."""
    return ProjectiveBasis.from_unitary(np.eye(2), (0, 1))


@pytest.fixture
def random_instances(rng: np.random.Generator) -> List[RandomInstance]:
    """Twenty random (state, generator, basis, theta) instances of dimension 2 to 6."""

    def build():
        for index in range(20):
            dim = 2 + index % 5
            state = random_mixed_state(dim, rng) if index % 2 else random_pure_state(dim, rng)
            yield RandomInstance(
                state=state,
                H=random_generator(dim, rng),
                basis=random_basis(dim, rng, coarse=index % 3 == 0),
                theta=float(rng.uniform(0.0, 2 * np.pi)),
            )

    return list(build())
