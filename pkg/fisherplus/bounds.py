import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple

import numpy as np
import scipy.linalg

from .errors import NumericalConsistencyError
from .moments import (
    OperatorFamily,
    ReducedStats,
    moment_data,
    optimal_family_coefficients,
    reduced_family,
    reduced_projector_stats,
)
from .quantum import (
    HermitianOperator,
    ProjectiveBasis,
    QuantumState,
    check_dimensions,
    commutator_expectation,
    hermitian_part,
    phase_evolve,
    variance,
)
from .spin import SpinSystem, spin_component
from .tolerances import (
    COMMUTATOR_ATOL,
    CROSS_CHECK_MAX_CONDITION,
    CROSS_CHECK_MAX_DIM,
    CROSS_CHECK_RTOL,
    ENHANCEMENT_CLAMP,
    HIERARCHY_ATOL,
    HIERARCHY_RTOL,
    IDENTITY_VARIANCE_ATOL,
    PROBABILITY_FLOOR,
    QFI_EIGENVALUE_CUTOFF,
)

"""
    bounds.py
    ---------
    Scalar sensitivity limits of phase estimation with a generator H:

        chi^{-2}   method-of-moments sensitivity of one observable X
        F          classical Fisher information of a projective basis
        E          enhancement gained by also knowing <H>, E = a b^2 >= 0
        F + E      best method-of-moments sensitivity over span(H, basis)
        F_Q        quantum Fisher information, the ceiling of all of them
        chi_SQZ    spin-squeezing sensitivity over collective spin observables

    and the metrological entanglement witness built on any of them.
"""


## Single observables ##########################################################################


class ObservableMoments(NamedTuple):
    variance: float
    slope: float  # d<X>/dtheta = -i<[X, H]>
    diagnostics: Tuple[str, ...]


def observable_moments(state_theta: QuantumState, H: HermitianOperator, X: HermitianOperator) -> ObservableMoments:
    check_dimensions(state_theta.dim, H.dim, X.dim)
    spread = variance(state_theta, X.matrix)
    slope = (-1j * commutator_expectation(state_theta, X.matrix, H.matrix)).real

    diagnostics = []
    if abs(slope) <= COMMUTATOR_ATOL:
        if spread <= IDENTITY_VARIANCE_ATOL:
            diagnostics.append("constant observable: zero variance and zero commutator")
        else:
            diagnostics.append("parameter-insensitive observable: <[X, H]> vanishes")
    return ObservableMoments(spread, float(slope), tuple(diagnostics))


def chi_squared(state_theta: QuantumState, H: HermitianOperator, X: HermitianOperator) -> float:
    """Return (Delta X)^2 / |<[X, H]>|^2, or +inf for a parameter-insensitive X."""
    moments = observable_moments(state_theta, H, X)
    if moments.diagnostics:
        logging.debug(moments.diagnostics[0])
        return math.inf
    return moments.variance / moments.slope**2


def inverse_chi_squared(state_theta: QuantumState, H: HermitianOperator, X: HermitianOperator) -> float:
    """Return chi^{-2}, the sensitivity of the observable (0 when insensitive)."""
    moments = observable_moments(state_theta, H, X)
    if moments.diagnostics:
        return 0.0
    if moments.variance <= 0.0:
        return math.inf
    return moments.slope**2 / moments.variance


## Fisher informations #########################################################################


def classical_fisher(
    state_theta: QuantumState,
    H: HermitianOperator,
    basis: ProjectiveBasis,
    probability_floor: float = PROBABILITY_FLOOR,
) -> float:
    """F = sum_x d_x^2 / p_x with analytic derivatives d_x = -i<[Pi_x, H]>."""
    return reduced_projector_stats(state_theta, H, basis, probability_floor).fisher


def enhancement(stats: ReducedStats) -> float:
    """E = a b^2, clamped to zero inside the tolerance window below zero."""
    value = stats.a * stats.b**2
    if value < 0.0:
        if value < -ENHANCEMENT_CLAMP:
            raise NumericalConsistencyError(f"Enhancement is negative: E = {value:.3e}")
        value = 0.0
    return float(value)


def quantum_fisher(state: QuantumState, H: HermitianOperator) -> float:
    """F_Q[rho, H], with the shortcut 4 (Delta H)^2 for pure states."""
    check_dimensions(state.dim, H.dim)
    if state.is_pure:
        return 4.0 * variance(state, H.matrix)

    eigenvalues, eigenvectors = scipy.linalg.eigh(hermitian_part(state.density_matrix))
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    elements = np.abs(eigenvectors.conj().T @ H.matrix @ eigenvectors) ** 2
    sums = eigenvalues[:, np.newaxis] + eigenvalues[np.newaxis, :]
    differences = eigenvalues[:, np.newaxis] - eigenvalues[np.newaxis, :]
    active = sums > QFI_EIGENVALUE_CUTOFF
    return float(2.0 * np.sum(differences[active] ** 2 / sums[active] * elements[active]))


## Spin squeezing and entanglement #############################################################


class SqueezingResult(NamedTuple):
    value: float
    direction: np.ndarray  # unit generator axis n, J_n = n . J
    generator: HermitianOperator  # J_n
    observable: np.ndarray  # unit coefficients of the collective observable reaching the value


def spin_squeezing_sensitivity(state: QuantumState, spin: SpinSystem) -> SqueezingResult:
    """Largest eigenvalue of the moment matrix over (J_x, J_y, J_z) and its unit direction.

    This is chi^{-2}_SQZ = max_n n^T M n over unit vectors n, the best
    method-of-moments sensitivity for any generator J_n and any collective
    spin observable. The observable c . J that reaches it is returned too.
    """
    check_dimensions(state.dim, spin.dim)
    md = moment_data(state, OperatorFamily.of(spin.jx, spin.jy, spin.jz))
    eigenvalues, eigenvectors = scipy.linalg.eigh(md.moment)
    direction = eigenvectors[:, -1]
    if direction[np.argmax(np.abs(direction))] < 0:
        direction = -direction
    return SqueezingResult(
        value=max(float(eigenvalues[-1]), 0.0),
        direction=direction,
        generator=spin_component(spin, direction),
        observable=optimal_family_coefficients(md, direction),
    )


def entanglement_witness(chi_inv2: float, N: int) -> int:
    """Largest integer k with chi^{-2} / N > k, or 0 if there is none."""
    if N < 1 or int(N) != N:
        raise ValueError(f"Particle number must be a positive integer, got {N}")
    if not math.isfinite(chi_inv2) or chi_inv2 < 0:
        raise ValueError(f"Sensitivity must be finite and nonnegative, got {chi_inv2}")
    return max(0, math.ceil(chi_inv2 / N) - 1)


## Sensitivity breakdown #######################################################################


@dataclass(frozen=True)
class SensitivityBreakdown:
    """All sensitivity limits of one (state, generator, basis) instance at phase theta."""

    theta: float
    fisher: float
    enhancement: float
    quantum_fisher: float
    a: float
    b: float
    squeezing: Optional[float] = None
    repetitions: Optional[int] = None
    estimator_variance: Optional[float] = None
    diagnostics: Tuple[str, ...] = field(default=())

    @property
    def enhanced(self) -> float:
        """F + E, the sensitivity of the optimal observable X_opt."""
        return self.fisher + self.enhancement

    def satisfies_hierarchy(self, rtol: float = HIERARCHY_RTOL, atol: float = HIERARCHY_ATOL) -> bool:
        """Check F <= F + E <= F_Q up to rtol * F_Q + atol."""
        slack = rtol * self.quantum_fisher + atol
        return self.fisher - slack <= self.enhanced <= self.quantum_fisher + slack


class CramerRaoVariances(NamedTuple):
    method_of_moments: float  # 1 / (mu (F + E)), reached by X_opt
    classical: float  # 1 / (mu F)
    quantum: float  # 1 / (mu F_Q)


def _inverse_or_inf(value: float) -> float:
    return 1.0 / value if value > 0.0 else math.inf


def cramer_rao_variances(breakdown: SensitivityBreakdown, repetitions: int) -> CramerRaoVariances:
    """Estimator variances after mu repetitions for the three sensitivity levels."""
    if repetitions < 1:
        raise ValueError(f"Repetitions must be positive, got {repetitions}")
    return CramerRaoVariances(
        method_of_moments=_inverse_or_inf(repetitions * breakdown.enhanced),
        classical=_inverse_or_inf(repetitions * breakdown.fisher),
        quantum=_inverse_or_inf(repetitions * breakdown.quantum_fisher),
    )


def _cross_check(
    state_theta: QuantumState, H: HermitianOperator, basis: ProjectiveBasis, stats: ReducedStats, enhanced: float
) -> Optional[str]:
    """Compare the closed form F + E with e1^T M e1 from the full moment matrix."""
    if state_theta.dim > CROSS_CHECK_MAX_DIM:
        return f"cross-check skipped: dimension {state_theta.dim} > {CROSS_CHECK_MAX_DIM}"
    md = moment_data(state_theta, reduced_family(H, basis, stats))
    if md.rank_deficient or md.condition >= CROSS_CHECK_MAX_CONDITION:
        return f"cross-check skipped: covariance condition number {md.condition:.3e}"

    reference = float(md.moment[0, 0])
    if abs(reference - enhanced) > CROSS_CHECK_RTOL * max(abs(reference), abs(enhanced)) + HIERARCHY_ATOL:
        raise NumericalConsistencyError(
            f"Closed-form F + E = {enhanced!r} disagrees with the moment matrix value {reference!r}"
        )
    return None


def enhanced_sensitivity(
    state: QuantumState,
    H: HermitianOperator,
    basis: ProjectiveBasis,
    theta: float,
    repetitions: Optional[int] = None,
    spin: Optional[SpinSystem] = None,
    probability_floor: float = PROBABILITY_FLOOR,
    cross_check: bool = True,
) -> SensitivityBreakdown:
    """
    Evolve the state by theta and collect every sensitivity limit of the basis.

    The closed forms F = sum_x d_x^2 / p_x and E = a b^2 come from the outcome
    statistics of rho(theta). On small, well-conditioned problems F + E is
    compared with e1^T M e1 of the full moment matrix, and the result is
    checked against the hierarchy F <= F + E <= F_Q.

    Args:
        state: State before the phase imprint.
        H: Phase generator.
        basis: Projective basis of the readout.
        theta: Phase imprinted by exp(-i H theta).
        repetitions: Number of repetitions mu; fills in 1/(mu (F + E)).
        spin: Collective spin of the state; adds the spin-squeezing sensitivity.
        probability_floor: Outcomes below this probability are masked out.
        cross_check: Whether to compare with the full moment matrix.

    Returns:
        SensitivityBreakdown with F, E, F_Q, a, b and the diagnostics.

    Raises:
        NumericalConsistencyError: If the two evaluations of F + E disagree
            or the hierarchy is violated.

    Example:
        >>> breakdown = enhanced_sensitivity(state, H, basis, theta=1.0, repetitions=100)
        >>> breakdown.fisher <= breakdown.enhanced <= breakdown.quantum_fisher
        True
    """
    check_dimensions(state.dim, H.dim, basis.dim)
    state_theta = phase_evolve(state, H, theta)
    stats = reduced_projector_stats(state_theta, H, basis, probability_floor)
    fisher = stats.fisher
    gain = enhancement(stats)
    diagnostics = list(stats.diagnostics)

    if cross_check:
        skipped = _cross_check(state_theta, H, basis, stats, fisher + gain)
        if skipped is not None:
            logging.debug(skipped)
            diagnostics.append(skipped)

    squeezing = spin_squeezing_sensitivity(state_theta, spin).value if spin is not None else None
    estimator_variance = None
    if repetitions is not None:
        if repetitions < 1:
            raise ValueError(f"Repetitions must be positive, got {repetitions}")
        estimator_variance = _inverse_or_inf(repetitions * (fisher + gain))

    breakdown = SensitivityBreakdown(
        theta=float(theta),
        fisher=fisher,
        enhancement=gain,
        quantum_fisher=quantum_fisher(state_theta, H),
        a=stats.a,
        b=stats.b,
        squeezing=squeezing,
        repetitions=repetitions,
        estimator_variance=estimator_variance,
        diagnostics=tuple(diagnostics),
    )
    if not breakdown.satisfies_hierarchy():
        raise NumericalConsistencyError(
            f"Sensitivity hierarchy violated: F = {fisher!r}, F + E = {breakdown.enhanced!r}, "
            f"F_Q = {breakdown.quantum_fisher!r}"
        )
    return breakdown

