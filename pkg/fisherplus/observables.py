from dataclasses import dataclass, replace
from typing import Dict, NamedTuple, Sequence, Tuple

import numpy as np

from .bounds import inverse_chi_squared
from .moments import ReducedStats, reduced_projector_stats
from .quantum import (
    HermitianOperator,
    Label,
    ProjectiveBasis,
    QuantumState,
    check_dimensions,
    hermitian_part,
    phase_evolve,
)
from .tolerances import PROBABILITY_FLOOR

"""
    observables.py
    --------------
    Observables of the form X = sum_x c_x Pi_x + c_H H that saturate the
    sensitivity limits:

        X_opt,0 = sum_x (d_x / p_x) Pi_x                          reaches F
        X_opt   = X_opt,0 + a b (sum_x (gamma_x / p_x) Pi_x - H)   reaches F + E

    Both are built at the phase theta the caller supplies, with the additive
    constant fixed to zero. Outcomes masked for a vanishing probability get
    coefficient zero.
"""

# Constants
NORMALIZATION_ATOL = 1e-10  # |c_H^2 + sum_x c_x^2 - 1| for normalized coefficients


@dataclass(frozen=True, eq=False)
class ObservableCoefficients:
    """Coefficients of X = sum_x c_x Pi_x + c_H H + offset."""

    c_h: float
    c_x: np.ndarray
    labels: Tuple[Label, ...]
    normalized: bool = False
    offset: float = 0.0

    def __post_init__(self) -> None:
        c_x = np.array(self.c_x, dtype=float)
        if c_x.ndim != 1 or c_x.size != len(self.labels):
            raise ValueError(f"Got {c_x.size} projector coefficients for {len(self.labels)} labels")
        if self.normalized and abs(self.norm - 1.0) > NORMALIZATION_ATOL:
            raise ValueError(f"Coefficients flagged as normalized have norm {self.norm!r}")
        c_x.setflags(write=False)
        object.__setattr__(self, "c_x", c_x)

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.c_h**2 + np.sum(np.asarray(self.c_x, dtype=float) ** 2)))

    def by_label(self) -> Dict[Label, float]:
        return dict(zip(self.labels, self.c_x.tolist()))


class OptimalObservable(NamedTuple):
    operator: HermitianOperator
    coefficients: ObservableCoefficients
    normalized: ObservableCoefficients
    stats: ReducedStats


def normalize_coefficients(raw: ObservableCoefficients) -> ObservableCoefficients:
    """Scale to c_H^2 + sum_x c_x^2 = 1 with the largest-magnitude coefficient positive."""
    norm = raw.norm
    if norm == 0.0:
        raise ValueError("Cannot normalize an all-zero coefficient vector")

    stacked = np.concatenate(([raw.c_h], raw.c_x)) / norm
    if stacked[np.argmax(np.abs(stacked))] < 0:
        stacked = -stacked
        norm = -norm
    return ObservableCoefficients(
        c_h=float(stacked[0]),
        c_x=stacked[1:],
        labels=raw.labels,
        normalized=True,
        offset=raw.offset / norm,
    )


def linear_observable(
    coefficients: ObservableCoefficients, H: HermitianOperator, basis: ProjectiveBasis
) -> HermitianOperator:
    """Assemble X = sum_x c_x Pi_x + c_H H + offset as a dense operator."""
    check_dimensions(H.dim, basis.dim)
    if len(coefficients.labels) != basis.size:
        raise ValueError(f"Expected {basis.size} projector coefficients, got {len(coefficients.labels)}")
    matrix = basis.weighted_sum(coefficients.c_x) + coefficients.c_h * H.matrix
    matrix = matrix + coefficients.offset * np.eye(H.dim)
    return HermitianOperator(hermitian_part(matrix))


def linear_observable_expectation(
    coefficients: ObservableCoefficients, p: Sequence[float], mean_h: float
) -> float:
    """<X> = sum_x c_x p(x|theta) + c_H <H> + offset, without forming X."""
    p = np.asarray(p, dtype=float)
    if p.shape != coefficients.c_x.shape:
        raise ValueError(f"Got {p.size} probabilities for {coefficients.c_x.size} coefficients")
    return float(coefficients.c_x @ p + coefficients.c_h * mean_h + coefficients.offset)


## Optimal observables #########################################################################


def _projector_ratios(stats: ReducedStats, values: np.ndarray) -> np.ndarray:
    ratios = np.zeros_like(stats.p)
    ratios[stats.kept] = values[stats.kept] / stats.p[stats.kept]
    return ratios


def _build(
    stats: ReducedStats, H: HermitianOperator, basis: ProjectiveBasis, c_h: float, c_x: np.ndarray
) -> OptimalObservable:
    raw = ObservableCoefficients(c_h=c_h, c_x=c_x, labels=basis.labels)
    normalized = normalize_coefficients(raw) if raw.norm > 0.0 else raw
    return OptimalObservable(linear_observable(raw, H, basis), raw, normalized, stats)


def x_opt0(
    state: QuantumState,
    H: HermitianOperator,
    basis: ProjectiveBasis,
    theta: float,
    probability_floor: float = PROBABILITY_FLOOR,
) -> OptimalObservable:
    """X_opt,0 = sum_x (d_x / p_x) Pi_x, whose sensitivity is F."""
    stats = reduced_projector_stats(phase_evolve(state, H, theta), H, basis, probability_floor)
    return _build(stats, H, basis, 0.0, _projector_ratios(stats, stats.d))


def x_opt(
    state: QuantumState,
    H: HermitianOperator,
    basis: ProjectiveBasis,
    theta: float,
    probability_floor: float = PROBABILITY_FLOOR,
) -> OptimalObservable:
    """
    Build X_opt = X_opt,0 + a b (sum_x (gamma_x / p_x) Pi_x - H), whose sensitivity is F + E.

    The expectation value of X_opt follows from the outcome probabilities and
    the known <H>, so the observable is estimable without measuring H.

    Args:
        state: State before the phase imprint.
        H: Phase generator.
        basis: Projective basis of the readout.
        theta: Phase at which the observable is optimal.
        probability_floor: Outcomes below this probability get coefficient zero.

    Returns:
        OptimalObservable with the dense operator, the raw coefficients
        (c_H = -a b), the normalized coefficients and the outcome statistics.

    Example:
        >>> optimal = x_opt(state, spin.jz, jy_basis(25), 0.0)
        >>> round(optimal.normalized.norm, 12)
        1.0
    """
    stats = reduced_projector_stats(phase_evolve(state, H, theta), H, basis, probability_floor)
    ab = stats.a * stats.b
    c_x = _projector_ratios(stats, stats.d) + ab * _projector_ratios(stats, stats.gamma)
    return _build(stats, H, basis, -ab, c_x)


class AblatedObservable(NamedTuple):
    operator: HermitianOperator
    inverse_chi_squared: float


def ablated_observable(
    state: QuantumState,
    H: HermitianOperator,
    basis: ProjectiveBasis,
    theta: float,
    probability_floor: float = PROBABILITY_FLOOR,
) -> AblatedObservable:
    """X_opt + a b H: the H contribution removed, measurable in the basis alone.

    It keeps the gradient of X_opt, but without the H term its variance
    grows and the sensitivity falls below F whenever E is large.
    """
    optimal = x_opt(state, H, basis, theta, probability_floor)
    ablated = replace(optimal.coefficients, c_h=0.0)
    operator = linear_observable(ablated, H, basis)
    return AblatedObservable(operator, inverse_chi_squared(phase_evolve(state, H, theta), H, operator))
