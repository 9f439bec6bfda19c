import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import NumericalConsistencyError
from .quantum import (
    HermitianOperator,
    ProjectiveBasis,
    QuantumState,
    check_dimensions,
    expectation,
    variance,
)
from .tolerances import (
    CONDITION_LIMIT,
    IMAGINARY_RESIDUE_ATOL,
    MASKED_DERIVATIVE_ATOL,
    PROBABILITY_FLOOR,
    PSD_FLOOR,
    RANK_CUTOFF,
    SCHUR_CUTOFF,
)

"""
    moments.py
    ----------
    The moment engine. For a family of observables (H_1, ..., H_L) and a
    state rho it builds the symmetrized covariance matrix Gamma, the
    commutator matrix C with entries -i<[H_k, H_l]> and the moment matrix
    M = C^T Gamma^{-1} C, whose quadratic form n^T M n is the largest
    method-of-moments sensitivity reachable with linear combinations of
    the family for the generator n . H.

    For the family made of a generator H and the projectors of a complete
    basis, the same quantities are available in closed form through the
    outcome probabilities p_x, their derivatives d_x and the covariances
    gamma_x = Cov(H, Pi_x). These are collected in ReducedStats.
"""

# Constants
SUM_RULE_ATOL = 1e-9  # |sum_x d_x| and |sum_x gamma_x|, relative to max(1, ||H||)
PROBABILITY_SUM_ATOL = 1e-10  # |sum_x p_x - 1|


## Operator families ###########################################################################


@dataclass(frozen=True, eq=False)
class OperatorFamily:
    """Ordered family of Hermitian observables acting on one Hilbert space."""

    members: Tuple[HermitianOperator, ...]

    def __post_init__(self) -> None:
        members = tuple(self.members)
        if not members:
            raise ValueError("An operator family needs at least one member")
        check_dimensions(*(member.dim for member in members))
        object.__setattr__(self, "members", members)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    @property
    def size(self) -> int:
        return len(self.members)

    @classmethod
    def of(cls, *members: HermitianOperator) -> "OperatorFamily":
        return cls(tuple(members))


class MomentMatrix(NamedTuple):
    matrix: np.ndarray
    rank: int
    condition: float
    rank_deficient: bool


@dataclass(frozen=True, eq=False)
class MomentData:
    """Covariance, commutator and moment matrices of a family in a fixed state."""

    gamma: np.ndarray
    commutator: np.ndarray
    moment: np.ndarray
    rank: int
    condition: float
    rank_deficient: bool

    @property
    def size(self) -> int:
        return self.gamma.shape[0]


def moment_matrix(
    gamma: np.ndarray, commutator: np.ndarray, rank_cutoff: float = RANK_CUTOFF
) -> MomentMatrix:
    """Return M = C^T Gamma^+ C together with the rank and condition of Gamma.

    Well-conditioned covariances are inverted exactly through a Cholesky
    factor. Otherwise the Moore-Penrose pseudo-inverse drops eigenvalues
    below ``rank_cutoff`` times the largest one. In both branches M is
    formed as a Gram matrix Y^T Y, so it is symmetric positive semidefinite.
    """
    size = gamma.shape[0]
    eigenvalues, eigenvectors = scipy.linalg.eigh(gamma)
    largest = float(eigenvalues[-1]) if size else 0.0
    if largest <= 0.0:
        return MomentMatrix(np.zeros((size, size)), 0, float("inf"), size > 0)

    keep = eigenvalues > rank_cutoff * largest
    rank = int(np.count_nonzero(keep))
    condition = largest / float(eigenvalues[keep][0]) if rank == size else float("inf")

    whitened = None
    if rank == size and condition < CONDITION_LIMIT:
        try:
            lower = scipy.linalg.cholesky(gamma, lower=True)
            whitened = scipy.linalg.solve_triangular(lower, commutator, lower=True)
        except np.linalg.LinAlgError:
            logging.debug("Cholesky factorization failed, falling back to the pseudo-inverse")
    if whitened is None:
        whitened = (eigenvectors[:, keep] / np.sqrt(eigenvalues[keep])).T @ commutator
        logging.debug(f"Covariance of rank {rank}/{size} inverted with the pseudo-inverse")

    matrix = whitened.T @ whitened
    return MomentMatrix(0.5 * (matrix + matrix.T), rank, condition, rank < size)


def moment_data(
    state: QuantumState, family: OperatorFamily, rank_cutoff: float = RANK_CUTOFF
) -> MomentData:
    """Build Gamma[rho, H], C[rho, H] and M[rho, H] for the family."""
    check_dimensions(state.dim, family.dim)
    factor = state.purification_factor

    # Column-stacked A_l B for every member, so that <A_k A_l> = Tr(B^dagger A_k A_l B)
    applied = np.stack([member.matrix @ factor for member in family.members])
    second_moments = np.einsum("kab,lab->kl", applied.conj(), applied)
    means = np.einsum("ab,lab->l", factor.conj(), applied)

    residue = float(np.max(np.abs(means.imag)))
    if residue > IMAGINARY_RESIDUE_ATOL * max(1.0, float(np.max(np.abs(means)))):
        raise NumericalConsistencyError(f"Expectation values have imaginary residue {residue:.3e}")
    means = means.real

    gamma = second_moments.real - np.outer(means, means)
    gamma = 0.5 * (gamma + gamma.T)
    commutator = 2.0 * second_moments.imag
    commutator = 0.5 * (commutator - commutator.T)

    smallest = float(scipy.linalg.eigvalsh(gamma)[0])
    scale = max(1.0, float(np.max(np.abs(gamma))))
    if smallest < PSD_FLOOR * scale:
        raise NumericalConsistencyError(f"Covariance matrix has negative eigenvalue {smallest:.3e}")

    moments = moment_matrix(gamma, commutator, rank_cutoff)
    return MomentData(
        gamma=gamma,
        commutator=commutator,
        moment=moments.matrix,
        rank=moments.rank,
        condition=moments.condition,
        rank_deficient=moments.rank_deficient,
    )


def max_moment_sensitivity(md: MomentData, n: Sequence[float]) -> float:
    """Return n^T M n, the best chi^{-2} over the span of the family for H = n . family."""
    n = np.asarray(n, dtype=float)
    if n.shape != (md.size,):
        raise ValueError(f"Generator direction has shape {n.shape}, expected ({md.size},)")
    return float(n @ md.moment @ n)


def optimal_family_coefficients(md: MomentData, n: Sequence[float]) -> np.ndarray:
    """Coefficients c of the family combination X = c . family reaching n^T M n.

    The maximizer of (c^T C n)^2 / (c^T Gamma c) is c = Gamma^+ C n, up to
    scale. The result is normalized to unit length; a zero vector comes back
    when C n vanishes.
    """
    n = np.asarray(n, dtype=float)
    if n.shape != (md.size,):
        raise ValueError(f"Generator direction has shape {n.shape}, expected ({md.size},)")
    pseudo_inverse = scipy.linalg.pinvh(md.gamma, rtol=RANK_CUTOFF)
    coefficients = pseudo_inverse @ (md.commutator @ n)
    norm = float(np.linalg.norm(coefficients))
    return coefficients / norm if norm > 0.0 else coefficients


## Closed-form statistics of a projective basis ################################################


@dataclass(frozen=True, eq=False)
class ReducedStats:
    """Outcome statistics of a basis together with the generator H.

    Arrays ``p``, ``d`` and ``gamma`` run over every outcome of the basis.
    Outcomes with a probability below the floor are masked out via ``kept``.
    ``w`` runs over ``reduced_indices``, the kept outcomes other than the
    removed one.
    """

    p: np.ndarray
    d: np.ndarray
    gamma: np.ndarray
    mean_h: float
    variance_h: float
    a: float
    b: float
    w: np.ndarray
    removed_index: int
    kept: np.ndarray
    reduced_indices: np.ndarray
    diagnostics: Tuple[str, ...] = field(default=())

    @property
    def fisher(self) -> float:
        """Classical Fisher information sum_x d_x^2 / p_x over the kept outcomes."""
        p, d = self.p[self.kept], self.d[self.kept]
        return float(np.sum(d**2 / p))

    @property
    def removed_position(self) -> int:
        """Position of the removed outcome among the kept ones."""
        return int(np.count_nonzero(self.kept[: self.removed_index]))


class OutcomeStatistics(NamedTuple):
    p: np.ndarray
    d: np.ndarray
    gamma: np.ndarray
    mean_h: float
    variance_h: float


def outcome_statistics(state_theta: QuantumState, H: HermitianOperator, basis: ProjectiveBasis) -> OutcomeStatistics:
    """Probabilities, derivatives d_x = -i<[Pi_x, H]> and covariances gamma_x = Cov(H, Pi_x)."""
    check_dimensions(state_theta.dim, H.dim, basis.dim)
    factor = state_theta.purification_factor
    stacked = basis.stacked

    # z_x = Tr(rho Pi_x H), accumulated column by column of the basis
    projected = stacked.conj().T @ factor
    projected_h = stacked.conj().T @ (H.matrix @ factor)
    p = basis.sum_over_outcomes(np.sum(np.abs(projected) ** 2, axis=1)).real
    z = basis.sum_over_outcomes(np.sum(projected.conj() * projected_h, axis=1))

    mean_h = expectation(state_theta, H.matrix)
    if abs(mean_h.imag) > IMAGINARY_RESIDUE_ATOL * max(1.0, abs(mean_h)):
        raise NumericalConsistencyError(f"<H> has imaginary residue {mean_h.imag:.3e}")
    mean_h = mean_h.real
    variance_h = variance(state_theta, H.matrix)

    d = 2.0 * z.imag
    gamma = z.real - mean_h * p

    scale = max(1.0, float(np.max(np.abs(H.spectrum[0]))))
    if abs(float(np.sum(p)) - 1.0) > PROBABILITY_SUM_ATOL:
        raise NumericalConsistencyError(f"Outcome probabilities sum to {np.sum(p)!r}")
    if abs(float(np.sum(d))) > SUM_RULE_ATOL * scale or abs(float(np.sum(gamma))) > SUM_RULE_ATOL * scale:
        raise NumericalConsistencyError("Derivatives or covariances violate the completeness sum rule")
    return OutcomeStatistics(p, d, gamma, mean_h, variance_h)


def schur_complement(outcomes: OutcomeStatistics, kept: np.ndarray) -> float:
    """Var(H) - sum_x gamma_x^2 / p_x over the kept outcomes, the unclamped 1/a."""
    return float(outcomes.variance_h - np.sum(outcomes.gamma[kept] ** 2 / outcomes.p[kept]))


def reduced_projector_stats(
    state_theta: QuantumState,
    H: HermitianOperator,
    basis: ProjectiveBasis,
    probability_floor: float = PROBABILITY_FLOOR,
    removed_index: Optional[int] = None,
) -> ReducedStats:
    """Compute p, d, gamma, a, b and w for the evolved state rho(theta)."""
    outcomes = outcome_statistics(state_theta, H, basis)
    p, d, gamma, mean_h, variance_h = outcomes

    kept = p >= probability_floor
    if not np.any(kept):
        raise NumericalConsistencyError("Every outcome probability lies below the floor")

    diagnostics = []
    divergent = (~kept) & (np.abs(d) > MASKED_DERIVATIVE_ATOL)
    if np.any(divergent):
        message = (
            f"{int(np.count_nonzero(divergent))} masked outcomes have |d_x| > {MASKED_DERIVATIVE_ATOL:g}; "
            "their Fisher contribution is dropped"
        )
        logging.warning(message)
        diagnostics.append(message)

    if removed_index is None:
        removed_index = int(np.argmax(p))
    elif not 0 <= removed_index < basis.size or not kept[removed_index]:
        raise ValueError(f"Removed outcome {removed_index} is out of range or masked")

    ratio = np.zeros_like(p)
    ratio[kept] = gamma[kept] / p[kept]
    schur = schur_complement(outcomes, kept)
    b = float(np.sum(ratio[kept] * d[kept]))

    if schur > SCHUR_CUTOFF * variance_h:
        a = 1.0 / schur
    else:
        if schur < PSD_FLOOR * max(1.0, variance_h):
            raise NumericalConsistencyError(f"Schur complement is negative: {schur:.3e}")
        a = 0.0
        if variance_h > SCHUR_CUTOFF:
            message = "Generator lies in the span of the measured projectors; enhancement set to zero"
            logging.debug(message)
            diagnostics.append(message)

    reduced_indices = np.array([x for x in np.flatnonzero(kept) if x != removed_index], dtype=int)
    w = ratio[reduced_indices] - ratio[removed_index]

    return ReducedStats(
        p=p,
        d=d,
        gamma=gamma,
        mean_h=mean_h,
        variance_h=variance_h,
        a=a,
        b=b,
        w=w,
        removed_index=removed_index,
        kept=kept,
        reduced_indices=reduced_indices,
        diagnostics=tuple(diagnostics),
    )


def structured_inverse(p: Sequence[float], removed_index: int) -> np.ndarray:
    """Closed-form inverse of the projector covariance with one outcome removed.

    For Gamma_Pi = diag(p) - p p^T restricted to x != r the inverse is
    diag(1/p_x) + (1/p_r) e e^T. ``p`` must be a full probability vector.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise ValueError(f"Need at least two probabilities, got shape {p.shape}")
    if not 0 <= removed_index < p.size:
        raise ValueError(f"Removed index {removed_index} out of range for {p.size} outcomes")
    if np.any(p <= 0.0):
        raise ValueError("Every kept probability must be strictly positive")
    if abs(float(np.sum(p)) - 1.0) > PROBABILITY_SUM_ATOL:
        raise ValueError(f"Probabilities must sum to one, got {np.sum(p)!r}")

    return _structured_inverse(p, removed_index)


def _structured_inverse(p: np.ndarray, removed_index: int) -> np.ndarray:
    reduced = np.delete(p, removed_index)
    return np.diag(1.0 / reduced) + np.full((reduced.size, reduced.size), 1.0 / p[removed_index])


def block_inverse(stats: ReducedStats) -> np.ndarray:
    """Inverse of Gamma[rho(theta), (H, Pi_x for x in reduced_indices)] from a, w and the structured inverse."""
    if stats.a == 0.0:
        raise ValueError("The covariance of H and the projectors is singular (a = 0)")
    projector_inverse = _structured_inverse(stats.p[stats.kept], stats.removed_position)
    size = stats.w.size + 1

    inverse = np.empty((size, size))
    inverse[0, 0] = stats.a
    inverse[0, 1:] = -stats.a * stats.w
    inverse[1:, 0] = -stats.a * stats.w
    inverse[1:, 1:] = projector_inverse + stats.a * np.outer(stats.w, stats.w)
    return inverse


def reduced_family(H: HermitianOperator, basis: ProjectiveBasis, stats: ReducedStats) -> OperatorFamily:
    """The family (H, Pi_x for x in reduced_indices) whose moment matrix carries F + E."""
    projectors = basis.projectors
    return OperatorFamily((H,) + tuple(projectors[x] for x in stats.reduced_indices))
