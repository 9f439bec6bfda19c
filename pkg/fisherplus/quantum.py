from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from .tolerances import (
    HERMITIAN_ATOL,
    PROJECTOR_ATOL,
    STATE_EIGENVALUE_FLOOR,
    STATE_NORM_ATOL,
    STATE_TRACE_ATOL,
)

"""
    quantum.py
    ----------
    Dense representations of Hermitian operators, quantum states and
    projective measurement bases, together with the expectation values
    and the phase evolution rho(theta) = exp(-i H theta) rho exp(i H theta)
    that every sensitivity computation is built on. All matrix exponentials
    go through the spectral decomposition of a Hermitian generator.
"""

Label = Union[int, float, str]


def _max_abs(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix))) if matrix.size else 0.0


def hermitian_part(matrix: np.ndarray) -> np.ndarray:
    """Return (A + A^dagger) / 2, for matrices that are Hermitian by construction."""
    return 0.5 * (matrix + matrix.conj().T)


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Dense complex square matrix, checked to be Hermitian on construction."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
            raise ValueError(f"Operator must be a non-empty square matrix, got shape {matrix.shape}")
        residue = _max_abs(matrix - matrix.conj().T)
        if residue > HERMITIAN_ATOL:
            raise ValueError(f"Operator is not Hermitian: max |A - A^dagger| = {residue:.3e}")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def spectrum(self) -> Tuple[np.ndarray, np.ndarray]:
        """Eigenvalues (ascending) and orthonormal eigenvectors (columns)."""
        eigenvalues, eigenvectors = scipy.linalg.eigh(self.matrix)
        return eigenvalues, eigenvectors

    def unitary(self, angle: float) -> np.ndarray:
        """Return exp(-i A angle) built from the spectral decomposition."""
        eigenvalues, eigenvectors = self.spectrum
        phases = np.exp(-1j * eigenvalues * angle)
        return (eigenvectors * phases) @ eigenvectors.conj().T

    def apply_unitary(self, vector: np.ndarray, angle: float) -> np.ndarray:
        """Return exp(-i A angle) |v> without forming the unitary."""
        eigenvalues, eigenvectors = self.spectrum
        phases = np.exp(-1j * eigenvalues * angle)
        return eigenvectors @ (phases * (eigenvectors.conj().T @ vector))

    @classmethod
    def identity(cls, dim: int) -> "HermitianOperator":
        return cls(np.eye(dim, dtype=complex))


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Pure state vector or density matrix of a finite-dimensional system.

    Exactly one of ``vector`` and ``density`` is set. Use the ``pure`` and
    ``mixed`` constructors rather than the raw initializer.
    """

    vector: Optional[np.ndarray] = None
    density: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if (self.vector is None) == (self.density is None):
            raise ValueError("A state needs exactly one of a vector or a density matrix")

        if self.vector is not None:
            vector = np.array(self.vector, dtype=complex)
            if vector.ndim != 1 or vector.size < 1:
                raise ValueError(f"State vector must be one-dimensional, got shape {vector.shape}")
            norm_error = abs(np.vdot(vector, vector).real - 1.0)
            if norm_error > STATE_NORM_ATOL:
                raise ValueError(f"State vector is not normalized: | <psi|psi> - 1 | = {norm_error:.3e}")
            vector.setflags(write=False)
            object.__setattr__(self, "vector", vector)
            return

        density = np.array(self.density, dtype=complex)
        if density.ndim != 2 or density.shape[0] != density.shape[1] or density.shape[0] < 1:
            raise ValueError(f"Density matrix must be square, got shape {density.shape}")
        residue = _max_abs(density - density.conj().T)
        if residue > HERMITIAN_ATOL:
            raise ValueError(f"Density matrix is not Hermitian: residue {residue:.3e}")
        trace_error = abs(np.trace(density) - 1.0)
        if trace_error > STATE_TRACE_ATOL:
            raise ValueError(f"Density matrix does not have unit trace: error {trace_error:.3e}")
        smallest = float(scipy.linalg.eigvalsh(hermitian_part(density))[0])
        if smallest < STATE_EIGENVALUE_FLOOR:
            raise ValueError(f"Density matrix is not positive semidefinite: eigenvalue {smallest:.3e}")
        density.setflags(write=False)
        object.__setattr__(self, "density", density)

    @classmethod
    def pure(cls, vector: Sequence[complex]) -> "QuantumState":
        return cls(vector=np.asarray(vector, dtype=complex))

    @classmethod
    def mixed(cls, density: np.ndarray) -> "QuantumState":
        return cls(density=np.asarray(density, dtype=complex))

    @property
    def is_pure(self) -> bool:
        return self.vector is not None

    @property
    def dim(self) -> int:
        if self.vector is not None:
            return self.vector.shape[0]
        assert self.density is not None
        return self.density.shape[0]

    @cached_property
    def density_matrix(self) -> np.ndarray:
        if self.vector is not None:
            return np.outer(self.vector, self.vector.conj())
        assert self.density is not None
        return self.density

    @cached_property
    def purification_factor(self) -> np.ndarray:
        """Matrix B with rho = B B^dagger (a single column for pure states)."""
        if self.vector is not None:
            return self.vector[:, np.newaxis]
        eigenvalues, eigenvectors = scipy.linalg.eigh(hermitian_part(self.density_matrix))
        weights = np.sqrt(np.clip(eigenvalues, 0.0, None))
        keep = weights > 0.0
        return eigenvectors[:, keep] * weights[keep]


@dataclass(frozen=True, eq=False)
class ProjectiveBasis:
    """Complete set of mutually orthogonal projectors Pi_x = V_x V_x^dagger.

    Each projector is stored through an isometry ``V_x`` (d x k_x, orthonormal
    columns), which keeps rank-one bases of large spin systems cheap.
    """

    isometries: Tuple[np.ndarray, ...]
    labels: Tuple[Label, ...] = field(default=())

    def __post_init__(self) -> None:
        isometries = tuple(np.atleast_2d(np.array(v, dtype=complex)) for v in self.isometries)
        isometries = tuple(v.T if v.shape[0] == 1 and v.shape[1] > 1 else v for v in isometries)
        if not isometries:
            raise ValueError("A projective basis needs at least one projector")
        dim = isometries[0].shape[0]
        for index, v in enumerate(isometries):
            if v.shape[0] != dim or v.shape[1] < 1:
                raise ValueError(f"Projector {index} has isometry shape {v.shape}, expected ({dim}, k)")
        labels = tuple(self.labels) if self.labels else tuple(range(len(isometries)))
        if len(labels) != len(isometries):
            raise ValueError(f"Got {len(labels)} labels for {len(isometries)} projectors")

        stacked = np.hstack(isometries)
        if stacked.shape[1] != dim:
            raise ValueError(f"Projector ranks sum to {stacked.shape[1]}, expected {dim} for completeness")
        overlap_error = _max_abs(stacked.conj().T @ stacked - np.eye(dim))
        if overlap_error > PROJECTOR_ATOL:
            raise ValueError(f"Projectors are not mutually orthogonal idempotents: residue {overlap_error:.3e}")
        completeness_error = _max_abs(stacked @ stacked.conj().T - np.eye(dim))
        if completeness_error > PROJECTOR_ATOL:
            raise ValueError(f"Projectors do not sum to the identity: residue {completeness_error:.3e}")

        for v in isometries:
            v.setflags(write=False)
        object.__setattr__(self, "isometries", isometries)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_projectors(
        cls, projectors: Sequence[np.ndarray], labels: Sequence[Label] = ()
    ) -> "ProjectiveBasis":
        """Build a basis from dense projector matrices."""
        isometries = []
        for index, projector in enumerate(projectors):
            eigenvalues, eigenvectors = scipy.linalg.eigh(hermitian_part(np.asarray(projector, dtype=complex)))
            support = eigenvalues > 0.5
            if not np.any(support):
                raise ValueError(f"Projector {index} is zero")
            isometries.append(eigenvectors[:, support])
        return cls(tuple(isometries), tuple(labels))

    @classmethod
    def from_unitary(cls, unitary: np.ndarray, labels: Sequence[Label] = ()) -> "ProjectiveBasis":
        """Rank-one basis given by the columns of a unitary matrix."""
        unitary = np.asarray(unitary, dtype=complex)
        return cls(tuple(unitary[:, [k]] for k in range(unitary.shape[1])), tuple(labels))

    @property
    def dim(self) -> int:
        return self.isometries[0].shape[0]

    @property
    def size(self) -> int:
        return len(self.isometries)

    @cached_property
    def stacked(self) -> np.ndarray:
        """All isometry columns side by side, a unitary d x d matrix."""
        return np.hstack(self.isometries)

    @cached_property
    def owner(self) -> np.ndarray:
        """Outcome index of every column of ``stacked``."""
        return np.concatenate([np.full(v.shape[1], x) for x, v in enumerate(self.isometries)])

    @cached_property
    def projectors(self) -> Tuple[HermitianOperator, ...]:
        return tuple(HermitianOperator(hermitian_part(v @ v.conj().T)) for v in self.isometries)

    def sum_over_outcomes(self, column_values: np.ndarray) -> np.ndarray:
        """Add up per-column values into per-outcome values."""
        column_values = np.asarray(column_values)
        if np.iscomplexobj(column_values):
            real = np.bincount(self.owner, weights=column_values.real, minlength=self.size)
            imag = np.bincount(self.owner, weights=column_values.imag, minlength=self.size)
            return real + 1j * imag
        return np.bincount(self.owner, weights=column_values, minlength=self.size)

    def weighted_sum(self, coefficients: np.ndarray) -> np.ndarray:
        """Return sum_x c_x Pi_x as a dense matrix."""
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.shape != (self.size,):
            raise ValueError(f"Expected {self.size} coefficients, got shape {coefficients.shape}")
        column_weights = coefficients[self.owner]
        return hermitian_part((self.stacked * column_weights) @ self.stacked.conj().T)


def check_dimensions(*dims: int) -> None:
    if len(set(dims)) > 1:
        raise ValueError(f"Dimension mismatch: {dims}")


def expectation(state: QuantumState, matrix: np.ndarray) -> complex:
    """Return <A> = Tr(rho A)."""
    check_dimensions(state.dim, matrix.shape[0])
    if state.vector is not None:
        return complex(np.vdot(state.vector, matrix @ state.vector))
    return complex(np.einsum("ij,ji->", state.density_matrix, matrix))


def variance(state: QuantumState, matrix: np.ndarray) -> float:
    """Return (Delta A)^2 = Tr(rho (A - <A>)^2), computed from the centred operator."""
    check_dimensions(state.dim, matrix.shape[0])
    mean = expectation(state, matrix).real
    centred = (matrix - mean * np.eye(matrix.shape[0])) @ state.purification_factor
    return float(np.vdot(centred, centred).real)


def commutator_expectation(state: QuantumState, first: np.ndarray, second: np.ndarray) -> complex:
    """Return <[A, B]>, which is purely imaginary for Hermitian A and B."""
    check_dimensions(state.dim, first.shape[0], second.shape[0])
    factor = state.purification_factor
    cross = np.vdot(first @ factor, second @ factor)
    return complex(2j * cross.imag)


def phase_evolve(state: QuantumState, generator: HermitianOperator, theta: float) -> QuantumState:
    """Imprint the phase theta: rho(theta) = exp(-i H theta) rho exp(i H theta)."""
    check_dimensions(state.dim, generator.dim)
    if state.vector is not None:
        return QuantumState.pure(generator.apply_unitary(state.vector, theta))
    unitary = generator.unitary(theta)
    return QuantumState.mixed(hermitian_part(unitary @ state.density_matrix @ unitary.conj().T))
