import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict

import numpy as np

from .quantum import (
    HermitianOperator,
    ProjectiveBasis,
    QuantumState,
    check_dimensions,
    hermitian_part,
    phase_evolve,
)
from .tolerances import HALF_INTEGER_ATOL, SPIN_CASIMIR_ATOL, SPIN_COMMUTATOR_ATOL

"""
    spin.py
    -------
    Collective spin operators of N = 2j spin-1/2 particles, represented in
    the (2j+1)-dimensional symmetric subspace with the J_z eigenbasis
    ordered m = j, j-1, ..., -j. Provides the spin-coherent state |j,j>_z,
    the one-axis-twisted states exp(-i J_y^2 tau)|j,j>_z, rotations and the
    J_y projective basis read out by the clock.
"""


@dataclass(frozen=True, eq=False)
class SpinSystem:
    """Collective spin of length j with its three Cartesian components."""

    j: float
    jx: HermitianOperator
    jy: HermitianOperator
    jz: HermitianOperator

    def __post_init__(self) -> None:
        jx, jy, jz = self.jx.matrix, self.jy.matrix, self.jz.matrix
        for first, second, third in ((jx, jy, jz), (jy, jz, jx), (jz, jx, jy)):
            residue = np.max(np.abs(first @ second - second @ first - 1j * third))
            if residue > SPIN_COMMUTATOR_ATOL:
                raise ValueError(f"Spin operators violate the commutation relations: residue {residue:.3e}")
        casimir = jx @ jx + jy @ jy + jz @ jz - self.j * (self.j + 1) * np.eye(self.dim)
        if np.max(np.abs(casimir)) > SPIN_CASIMIR_ATOL:
            raise ValueError("Spin operators violate the Casimir identity")

    @property
    def dim(self) -> int:
        return self.jz.dim

    @property
    def particles(self) -> int:
        return int(round(2 * self.j))

    @property
    def components(self) -> Dict[str, HermitianOperator]:
        return {"x": self.jx, "y": self.jy, "z": self.jz}

    @property
    def magnetic_numbers(self) -> np.ndarray:
        """m = j, j-1, ..., -j, the J_z eigenvalues in basis order."""
        return self.j - np.arange(self.dim)


def validate_spin_length(j: float) -> float:
    """Return j as an exact half-integer, raising ValueError otherwise."""
    twice = 2 * float(j)
    if not np.isfinite(twice) or twice <= 0 or abs(twice - round(twice)) > HALF_INTEGER_ATOL:
        raise ValueError(f"Spin length must be a positive half-integer, got {j}")
    return round(twice) / 2


@lru_cache(maxsize=32)
def _spin_system(j: float) -> SpinSystem:
    dim = int(round(2 * j)) + 1
    m = j - np.arange(dim)

    # <m+1| J+ |m> sits at row i, column i+1 in the m = j..-j ordering
    raising = np.diag(np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1)), k=1).astype(complex)
    lowering = raising.T
    jx = 0.5 * (raising + lowering)
    jy = -0.5j * (raising - lowering)
    jz = np.diag(m).astype(complex)

    logging.debug(f"Built spin operators for j={j} in dimension {dim}")
    return SpinSystem(j, HermitianOperator(jx), HermitianOperator(jy), HermitianOperator(jz))


def make_spin_operators(j: float) -> SpinSystem:
    """Collective spin operators from the ladder-operator algebra in the J_z eigenbasis."""
    return _spin_system(validate_spin_length(j))


def spin_length_of(dim: int) -> float:
    """Spin length j of the symmetric subspace with the given dimension."""
    if dim < 2:
        raise ValueError(f"A spin system needs dimension at least 2, got {dim}")
    return (dim - 1) / 2


def coherent_state_z(j: float) -> QuantumState:
    """The highest-weight state |j,j>_z with all spins along +z."""
    dim = int(round(2 * validate_spin_length(j))) + 1
    vector = np.zeros(dim, dtype=complex)
    vector[0] = 1.0
    return QuantumState.pure(vector)


def _fix_phases(eigenvectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component of every column real and positive."""
    pivots = np.argmax(np.abs(eigenvectors), axis=0)
    pivot_values = eigenvectors[pivots, np.arange(eigenvectors.shape[1])]
    return eigenvectors * (np.abs(pivot_values) / pivot_values)


@lru_cache(maxsize=32)
def _jy_basis(j: float) -> ProjectiveBasis:
    spin = _spin_system(j)
    _, eigenvectors = spin.jy.spectrum
    eigenvectors = _fix_phases(eigenvectors)
    labels = tuple(float(m) for m in -spin.magnetic_numbers)
    return ProjectiveBasis.from_unitary(eigenvectors, labels)


def jy_basis(j: float) -> ProjectiveBasis:
    """Rank-one projectors onto the J_y eigenstates, labeled m_y = -j, ..., j."""
    return _jy_basis(validate_spin_length(j))


def jz_basis(j: float) -> ProjectiveBasis:
    """Rank-one projectors onto the J_z eigenstates, labeled m = j, ..., -j."""
    spin = make_spin_operators(j)
    labels = tuple(float(m) for m in spin.magnetic_numbers)
    return ProjectiveBasis.from_unitary(np.eye(spin.dim, dtype=complex), labels)


def oat_state(j: float, tau: float) -> QuantumState:
    """One-axis-twisted state exp(-i J_y^2 tau)|j,j>_z.

    The twist is diagonal in the J_y eigenbasis, so the coherent state is
    transformed there, multiplied by exp(-i m_y^2 tau) and transformed back.
    """
    if not np.isfinite(tau):
        raise ValueError(f"Twisting time must be finite, got {tau}")
    basis = jy_basis(j)
    m_y = np.asarray(basis.labels, dtype=float)
    amplitudes = basis.stacked.conj().T @ coherent_state_z(j).vector
    twisted = basis.stacked @ (np.exp(-1j * m_y**2 * tau) * amplitudes)
    return QuantumState.pure(twisted)


def rotate(state: QuantumState, axis: str, angle: float) -> QuantumState:
    """Apply exp(-i J_axis angle) for the spin system matching the state's dimension."""
    spin = make_spin_operators(spin_length_of(state.dim))
    check_dimensions(state.dim, spin.dim)
    try:
        generator = spin.components[axis]
    except KeyError:
        raise ValueError(f"Rotation axis must be one of x, y, z, got {axis!r}") from None
    return phase_evolve(state, generator, angle)


def spin_component(spin: SpinSystem, direction: np.ndarray) -> HermitianOperator:
    """J_n = n . J for a real direction n."""
    direction = np.asarray(direction, dtype=float)
    if direction.shape != (3,):
        raise ValueError(f"Direction must have three components, got shape {direction.shape}")
    matrix = direction[0] * spin.jx.matrix + direction[1] * spin.jy.matrix + direction[2] * spin.jz.matrix
    return HermitianOperator(hermitian_part(matrix))
