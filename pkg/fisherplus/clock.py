import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, NamedTuple, Sequence, Tuple, TypeVar

import numpy as np
import scipy.optimize
import scipy.stats

from .bounds import enhanced_sensitivity, enhancement, entanglement_witness
from .moments import reduced_projector_stats
from .observables import x_opt, x_opt0
from .quantum import ProjectiveBasis, phase_evolve
from .spin import jy_basis, jz_basis, make_spin_operators, oat_state, validate_spin_length
from .tolerances import PROBABILITY_FLOOR, TAU_POINTS, TAU_SCALED_MAX, TAU_XTOL

"""
    clock.py
    --------
    The Ramsey clock with one-axis-twisted states. N = 2j atoms are
    prepared in exp(-i J_y^2 tau)|j,j>_z, acquire the phase theta under J_z
    and are read out in the J_y eigenbasis. This module sweeps the
    twisting strength tau, locates the tau that maximizes the enhancement E,
    follows the gain (F + E)/F with the atom number and tabulates the
    coefficients of the optimal observables.

    Twisting strengths are passed as raw tau; tau * sqrt(j) is the scaled
    coordinate in which the interesting features sit at j-independent places.
"""

# Constants
LOG_INTERVAL = 50  # number of sweep points between progress logs

T = TypeVar("T")
R = TypeVar("R")


def _ordered_map(function: Callable[[T], R], items: Iterable[T], workers: int) -> List[R]:
    """Map in input order, on a thread pool when more than one worker is requested."""
    if workers < 1:
        raise ValueError(f"Number of workers must be positive, got {workers}")
    if workers == 1:
        return [function(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(function, items))


## Sensitivity sweep ###########################################################################


@dataclass(frozen=True)
class SweepRecord:
    """Sensitivity limits of the clock at one twisting strength, raw in rad^-2."""

    j: float
    tau: float
    theta: float
    fisher: float
    enhancement: float
    quantum_fisher: float
    squeezing: float
    diagnostics: Tuple[str, ...] = field(default=())

    @property
    def N(self) -> int:
        return int(round(2 * self.j))

    @property
    def tau_scaled(self) -> float:
        return self.tau * math.sqrt(self.j)

    @property
    def enhanced(self) -> float:
        return self.fisher + self.enhancement

    # Rescaled by the shot-noise limit N
    @property
    def fisher_rescaled(self) -> float:
        return self.fisher / self.N

    @property
    def enhancement_rescaled(self) -> float:
        return self.enhancement / self.N

    @property
    def enhanced_rescaled(self) -> float:
        return self.enhanced / self.N

    @property
    def quantum_fisher_rescaled(self) -> float:
        return self.quantum_fisher / self.N

    @property
    def squeezing_rescaled(self) -> float:
        return self.squeezing / self.N


def scaled_tau_grid(
    j: float, tau_min: float = 0.0, tau_max: float = TAU_SCALED_MAX, points: int = TAU_POINTS
) -> np.ndarray:
    """Raw tau values evenly spaced in tau * sqrt(j) over [tau_min, tau_max]."""
    j = validate_spin_length(j)
    if points < 1:
        raise ValueError(f"Need at least one grid point, got {points}")
    if not 0.0 <= tau_min <= tau_max:
        raise ValueError(f"Scaled window must satisfy 0 <= tau_min <= tau_max, got [{tau_min}, {tau_max}]")
    return np.linspace(tau_min, tau_max, points) / math.sqrt(j)


def sweep_point(
    j: float, tau: float, theta: float = 0.0, probability_floor: float = PROBABILITY_FLOOR
) -> SweepRecord:
    spin = make_spin_operators(j)
    breakdown = enhanced_sensitivity(
        oat_state(j, tau),
        spin.jz,
        jy_basis(j),
        theta,
        spin=spin,
        probability_floor=probability_floor,
        cross_check=False,
    )
    assert breakdown.squeezing is not None
    return SweepRecord(
        j=spin.j,
        tau=float(tau),
        theta=float(theta),
        fisher=breakdown.fisher,
        enhancement=breakdown.enhancement,
        quantum_fisher=breakdown.quantum_fisher,
        squeezing=breakdown.squeezing,
        diagnostics=breakdown.diagnostics,
    )


def sensitivity_sweep(
    j: float,
    tau_grid: Sequence[float],
    theta: float = 0.0,
    workers: int = 1,
    probability_floor: float = PROBABILITY_FLOOR,
) -> List[SweepRecord]:
    """One SweepRecord per twisting strength, in the order of ``tau_grid``."""
    j = validate_spin_length(j)
    taus = [float(tau) for tau in tau_grid]
    if any(not math.isfinite(tau) or tau < 0.0 for tau in taus):
        raise ValueError("Twisting strengths must be finite and nonnegative")
    logging.info(f"Sweeping {len(taus)} twisting strengths at j={j}, theta={theta}...")

    def evaluate(indexed: Tuple[int, float]) -> SweepRecord:
        index, tau = indexed
        if (index + 1) % LOG_INTERVAL == 0:
            logging.info(f"{index + 1} sweep points evaluated...")
        return sweep_point(j, tau, theta, probability_floor)

    return _ordered_map(evaluate, list(enumerate(taus)), workers)


## Optimal twisting strength ###################################################################


class TauOptimum(NamedTuple):
    tau: float
    enhancement: float
    j: float

    @property
    def tau_scaled(self) -> float:
        return self.tau * math.sqrt(self.j)


def enhancement_at(j: float, tau: float, theta: float = 0.0, probability_floor: float = PROBABILITY_FLOOR) -> float:
    """E of the clock at a single twisting strength."""
    H = make_spin_operators(j).jz
    state_theta = phase_evolve(oat_state(j, tau), H, theta)
    return enhancement(reduced_projector_stats(state_theta, H, jy_basis(j), probability_floor))


def find_tau_opt(
    j: float,
    theta: float = 0.0,
    points: int = TAU_POINTS,
    scaled_max: float = TAU_SCALED_MAX,
    probability_floor: float = PROBABILITY_FLOOR,
) -> TauOptimum:
    """
    Find the twisting strength that maximizes the enhancement E of the clock.

    E is evaluated on an even grid in tau * sqrt(j) over [0, scaled_max] and
    the best grid point is refined by golden-section search between its
    neighbours. A maximum on the edge of the window is logged and returned
    unrefined.

    Args:
        j: Spin length, N = 2j atoms.
        theta: Phase imprinted before the J_y readout.
        points: Number of coarse grid points.
        scaled_max: Upper end of the window in tau * sqrt(j).
        probability_floor: Outcomes below this probability are masked out.

    Returns:
        TauOptimum with the raw tau, E at that tau and j.

    Example:
        >>> optimum = find_tau_opt(25)
        >>> 0.0 <= optimum.tau_scaled <= TAU_SCALED_MAX
        True
    """
    j = validate_spin_length(j)
    root_j = math.sqrt(j)
    scaled = np.linspace(0.0, scaled_max, points)
    coarse = np.array([enhancement_at(j, s / root_j, theta, probability_floor) for s in scaled])
    best = int(np.argmax(coarse))
    best_scaled, best_value = float(scaled[best]), float(coarse[best])

    if 0 < best < points - 1:
        try:
            result = scipy.optimize.minimize_scalar(
                lambda s: -enhancement_at(j, s / root_j, theta, probability_floor),
                bracket=(scaled[best - 1], scaled[best], scaled[best + 1]),
                method="golden",
                options={"xtol": TAU_XTOL},
            )
            if -result.fun >= best_value:
                best_scaled, best_value = float(result.x), float(-result.fun)
        except ValueError as error:
            logging.warning(f"Golden-section refinement failed at j={j}: {error}")
    else:
        logging.warning(f"Enhancement maximum at j={j} sits on the edge of the scaled window")

    logging.debug(f"tau_opt * sqrt(j) = {best_scaled:.6f} at j={j}, E = {best_value:.6g}")
    return TauOptimum(best_scaled / root_j, best_value, j)


## Scaling with the atom number ################################################################


@dataclass(frozen=True)
class ScalingRecord:
    """Clock figures of merit at the twisting strength maximizing E."""

    j: float
    tau_opt: float
    fisher: float
    enhancement: float
    gain_ratio: float  # (F + E) / F at tau_opt
    c_h: float  # |c_H| of the normalized X_opt
    witness_f: int
    witness_fe: int

    @property
    def N(self) -> int:
        return int(round(2 * self.j))

    @property
    def tau_opt_scaled(self) -> float:
        return self.tau_opt * math.sqrt(self.j)

    @property
    def enhancement_rescaled(self) -> float:
        return self.enhancement / self.N


def scaling_point(j: float, theta: float = 0.0, probability_floor: float = PROBABILITY_FLOOR) -> ScalingRecord:
    j = validate_spin_length(j)
    optimum = find_tau_opt(j, theta, probability_floor=probability_floor)
    spin = make_spin_operators(j)
    state = oat_state(j, optimum.tau)
    basis = jy_basis(j)

    breakdown = enhanced_sensitivity(
        state, spin.jz, basis, theta, probability_floor=probability_floor, cross_check=False
    )
    optimal = x_opt(state, spin.jz, basis, theta, probability_floor)
    gain = breakdown.enhanced / breakdown.fisher if breakdown.fisher > 0.0 else math.inf

    logging.info(f"j={j}: tau_opt * sqrt(j) = {optimum.tau_scaled:.4f}, gain (F + E)/F = {gain:.4f}")
    return ScalingRecord(
        j=j,
        tau_opt=optimum.tau,
        fisher=breakdown.fisher,
        enhancement=breakdown.enhancement,
        gain_ratio=gain,
        c_h=abs(optimal.normalized.c_h),
        witness_f=entanglement_witness(breakdown.fisher, spin.particles),
        witness_fe=entanglement_witness(breakdown.enhanced, spin.particles),
    )


def gain_scaling(
    j_list: Sequence[float],
    theta: float = 0.0,
    workers: int = 1,
    probability_floor: float = PROBABILITY_FLOOR,
) -> List[ScalingRecord]:
    """One ScalingRecord per spin length, in the order of ``j_list``."""
    if len(j_list) == 0:
        raise ValueError("Need at least one spin length")
    js = [validate_spin_length(j) for j in j_list]
    return _ordered_map(lambda j: scaling_point(j, theta, probability_floor), js, workers)


class LinearFit(NamedTuple):
    slope: float
    intercept: float
    r_squared: float


def linear_fit(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    """Least-squares line through (x, y) with its coefficient of determination."""
    if len(x) < 3:
        raise ValueError(f"A line fit needs at least three points, got {len(x)}")
    result = scipy.stats.linregress(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return LinearFit(float(result.slope), float(result.intercept), float(result.rvalue**2))


## Coefficient profiles ########################################################################


class CoefficientProfile(NamedTuple):
    labels: Tuple[float, ...]
    c_opt: np.ndarray
    c_opt0: np.ndarray
    c_h: float  # c_H of the normalized X_opt; X_opt,0 has none

    def rows(self) -> List[Tuple[float, float, float, float]]:
        return [
            (float(m), float(c), float(c0), self.c_h) for m, c, c0 in zip(self.labels, self.c_opt, self.c_opt0)
        ]


def coefficient_profile(
    j: float,
    tau: float,
    theta: float = 0.0,
    basis: str = "y",
    probability_floor: float = PROBABILITY_FLOOR,
) -> CoefficientProfile:
    """Normalized coefficients of X_opt and X_opt,0 indexed by the outcome label.

    ``basis`` selects the J_y readout of the clock or the J_z eigenbasis, in
    which every coefficient vanishes because the readout commutes with J_z.
    """
    readouts = {"y": jy_basis, "z": jz_basis}
    if basis not in readouts:
        raise ValueError(f"Basis must be 'y' or 'z', got {basis!r}")
    measured: ProjectiveBasis = readouts[basis](j)
    spin = make_spin_operators(j)
    state = oat_state(j, tau)

    optimal = x_opt(state, spin.jz, measured, theta, probability_floor)
    reference = x_opt0(state, spin.jz, measured, theta, probability_floor)
    return CoefficientProfile(
        labels=tuple(float(m) for m in measured.labels),
        c_opt=optimal.normalized.c_x,
        c_opt0=reference.normalized.c_x,
        c_h=optimal.normalized.c_h,
    )
