import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional

import numpy as np
import scipy.optimize
from scipy.stats import unitary_group

from .bounds import enhanced_sensitivity, observable_moments
from .errors import NumericalConsistencyError, VerificationFailure
from .moments import (
    OperatorFamily,
    block_inverse,
    moment_data,
    outcome_statistics,
    reduced_family,
    reduced_projector_stats,
    schur_complement,
    structured_inverse,
)
from .observables import x_opt, x_opt0
from .quantum import HermitianOperator, ProjectiveBasis, QuantumState, phase_evolve
from .tolerances import CROSS_CHECK_MAX_CONDITION, CROSS_CHECK_RTOL, ENHANCEMENT_CLAMP, PROBABILITY_FLOOR

"""
    verify.py
    ---------
    Property suite over seeded random instances. Every instance is a
    random state (Haar pure or Ginibre mixed), a GUE generator and a random
    projective basis (rank-one or coarse-grained) at a random phase. The
    suite checks the nonnegativity of E, the hierarchy F <= F + E <= F_Q,
    the agreement of the closed forms with the full moment matrix, the
    structured inverses, the analytic derivatives, the optimal-observable
    identities and that no random observable beats F + E.

    The report is a plain text table and depends only on the seed and the
    instance count.
"""

# Constants
MIN_DIM = 2
MAX_DIM = 8
FINITE_DIFFERENCE_STEP = 1e-5
FINITE_DIFFERENCE_RTOL = 1e-6  # relative to max_x |d_x|
INVERSE_RTOL = 1e-10  # structured inverse against the dense inverse, relative max-norm
BLOCK_INVERSE_RTOL = 1e-8
IDENTITY_RTOL = 1e-8
CEILING_ATOL = 1e-9
LOCAL_MAXIMUM_FRACTION = 0.99
MAX_OUTCOMES = 12  # largest outcome count of the random probability vectors
CEILING_DRAWS = 10_000
CEILING_INSTANCES = 50  # instances that also run the brute-force ceiling
FINITE_DIFFERENCE_INSTANCES = 50


class CheckResult(NamedTuple):
    name: str
    passed: int
    failed: int
    skipped: int
    worst: float  # largest normalized violation seen, 0 when every check passed cleanly


class _Tally:
    def __init__(self) -> None:
        self.passed = 0
        self.failed = 0
        self.skipped = 0
        self.worst = 0.0

    def record(self, ok: bool, error: float = 0.0) -> None:
        if ok:
            self.passed += 1
        else:
            self.failed += 1
        if np.isfinite(error):
            self.worst = max(self.worst, float(error))

    def skip(self) -> None:
        self.skipped += 1


@dataclass(frozen=True)
class VerificationReport:
    seed: int
    instances: int
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.failed == 0 for check in self.checks)

    def render(self) -> str:
        lines = [f"seed {self.seed}, {self.instances} instances, dims {MIN_DIM}-{MAX_DIM}"]
        width = max(len(check.name) for check in self.checks)
        for check in self.checks:
            status = "PASS" if check.failed == 0 else "FAIL"
            lines.append(
                f"{check.name.ljust(width)}  {status}  passed {check.passed}  failed {check.failed}  "
                f"skipped {check.skipped}  worst {check.worst:.3e}"
            )
        lines.append("all checks passed" if self.passed else "verification failed")
        return "\n".join(lines) + "\n"

    def raise_for_failures(self) -> None:
        failing = [check.name for check in self.checks if check.failed]
        if failing:
            raise VerificationFailure(f"Failing checks: {', '.join(failing)}")


## Random instances ############################################################################


class RandomInstance(NamedTuple):
    state: QuantumState
    H: HermitianOperator
    basis: ProjectiveBasis
    theta: float


def random_pure_state(dim: int, rng: np.random.Generator) -> QuantumState:
    """Haar-random pure state: the first column of a Haar-random unitary."""
    vector = unitary_group.rvs(dim, random_state=rng)[:, 0]
    return QuantumState.pure(vector / np.linalg.norm(vector))


def random_mixed_state(dim: int, rng: np.random.Generator) -> QuantumState:
    """Ginibre-distributed full-rank density matrix G G^dagger / Tr(G G^dagger)."""
    ginibre = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    density = ginibre @ ginibre.conj().T
    density = 0.5 * (density + density.conj().T)
    return QuantumState.mixed(density / np.trace(density).real)


def random_generator(dim: int, rng: np.random.Generator) -> HermitianOperator:
    """GUE matrix scaled by 1/sqrt(dim), so its spectrum stays of order one."""
    matrix = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    return HermitianOperator(0.5 * (matrix + matrix.conj().T) / np.sqrt(dim))


def random_basis(dim: int, rng: np.random.Generator, coarse: bool = False) -> ProjectiveBasis:
    """Columns of a Haar-random unitary, optionally grouped into higher-rank projectors."""
    unitary = unitary_group.rvs(dim, random_state=rng)
    if not coarse or dim < 3:
        return ProjectiveBasis.from_unitary(unitary)
    outcomes = int(rng.integers(2, dim))
    cuts = np.sort(rng.choice(np.arange(1, dim), size=outcomes - 1, replace=False))
    return ProjectiveBasis(tuple(np.split(unitary, cuts, axis=1)))


def random_instance(rng: np.random.Generator) -> RandomInstance:
    dim = int(rng.integers(MIN_DIM, MAX_DIM + 1))
    mixed = bool(rng.integers(0, 2))
    coarse = bool(rng.integers(0, 2))
    state = random_mixed_state(dim, rng) if mixed else random_pure_state(dim, rng)
    return RandomInstance(
        state=state,
        H=random_generator(dim, rng),
        basis=random_basis(dim, rng, coarse),
        theta=float(rng.uniform(0.0, 2.0 * np.pi)),
    )


def _relative_error(value: float, reference: float) -> float:
    return abs(value - reference) / max(abs(value), abs(reference), 1e-12)


## Checks ######################################################################################


def _check_structured_inverse(rng: np.random.Generator, tally: _Tally) -> None:
    outcomes = int(rng.integers(2, MAX_OUTCOMES + 1))
    p = rng.dirichlet(np.ones(outcomes))
    removed = int(rng.integers(0, outcomes))
    closed = structured_inverse(p, removed)
    reduced = np.delete(p, removed)
    dense = np.linalg.inv(np.diag(reduced) - np.outer(reduced, reduced))
    error = float(np.max(np.abs(closed - dense)) / np.max(np.abs(dense)))
    tally.record(error <= INVERSE_RTOL, error / INVERSE_RTOL)


def _check_finite_difference(instance: RandomInstance, tally: _Tally) -> None:
    state, H, basis, theta = instance
    d = outcome_statistics(phase_evolve(state, H, theta), H, basis).d
    forward = outcome_statistics(phase_evolve(state, H, theta + FINITE_DIFFERENCE_STEP), H, basis).p
    backward = outcome_statistics(phase_evolve(state, H, theta - FINITE_DIFFERENCE_STEP), H, basis).p
    numeric = (forward - backward) / (2 * FINITE_DIFFERENCE_STEP)
    error = float(np.max(np.abs(numeric - d)) / max(float(np.max(np.abs(d))), 1e-12))
    tally.record(error <= FINITE_DIFFERENCE_RTOL, error / FINITE_DIFFERENCE_RTOL)


def _check_ceiling(
    state_theta: QuantumState, H: HermitianOperator, basis: ProjectiveBasis, enhanced: float,
    rng: np.random.Generator, ceiling: _Tally, local: _Tally,
) -> None:
    """Random X = c_H H + sum_x c_x Pi_x never beat F + E, and a local search gets close."""
    full = moment_data(state_theta, OperatorFamily((H,) + basis.projectors))
    gradient = full.commutator[:, 0]

    def sensitivity(coefficients: np.ndarray) -> np.ndarray:
        spread = np.einsum("...k,kl,...l->...", coefficients, full.gamma, coefficients)
        slope = coefficients @ gradient
        return np.where(spread > 0.0, slope**2 / np.where(spread > 0.0, spread, 1.0), 0.0)

    draws = rng.normal(size=(CEILING_DRAWS, full.size))
    best = float(np.max(sensitivity(draws)))
    slack = CEILING_ATOL * max(1.0, enhanced)
    ceiling.record(best <= enhanced + slack, max(0.0, best - enhanced) / slack)

    if enhanced <= 0.0:
        local.skip()
        return
    result = scipy.optimize.minimize(lambda c: -float(sensitivity(c)), draws[int(np.argmax(sensitivity(draws)))])
    reached = -float(result.fun)
    local.record(reached >= LOCAL_MAXIMUM_FRACTION * enhanced, max(0.0, 1.0 - reached / enhanced))


def run_verification(seed: int, instances: int = 1000) -> VerificationReport:
    """Run every property check over ``instances`` random instances drawn from ``seed``."""
    if instances < 1:
        raise ValueError(f"Need at least one instance, got {instances}")
    rng = np.random.default_rng(seed)
    names = (
        "nonnegativity",
        "hierarchy",
        "two_path",
        "structured_inverse",
        "block_inverse",
        "finite_difference",
        "x_opt_identities",
        "x_opt0_identities",
        "pure_rank_one",
        "ceiling",
        "local_maximum",
    )
    tallies: Dict[str, _Tally] = OrderedDict((name, _Tally()) for name in names)

    for index in range(instances):
        instance = random_instance(rng)
        state, H, basis, theta = instance
        state_theta = phase_evolve(state, H, theta)
        _check_structured_inverse(rng, tallies["structured_inverse"])

        try:
            outcomes = outcome_statistics(state_theta, H, basis)
        except NumericalConsistencyError as error:
            logging.warning(f"Instance {index}: {error}")
            tallies["nonnegativity"].skip()
            tallies["hierarchy"].record(False)
            continue
        schur = schur_complement(outcomes, outcomes.p >= PROBABILITY_FLOOR)
        slack = ENHANCEMENT_CLAMP * max(1.0, outcomes.variance_h)
        nonnegative = schur >= -slack
        tallies["nonnegativity"].record(nonnegative, max(0.0, -schur) / slack)

        try:
            breakdown = enhanced_sensitivity(state, H, basis, theta, cross_check=False)
        except NumericalConsistencyError as error:
            logging.warning(f"Instance {index}: {error}")
            if nonnegative:
                tallies["hierarchy"].record(False)
            else:
                tallies["hierarchy"].skip()
            continue
        tallies["hierarchy"].record(breakdown.satisfies_hierarchy())
        stats = reduced_projector_stats(state_theta, H, basis)

        md = moment_data(state_theta, reduced_family(H, basis, stats))
        well_conditioned = not md.rank_deficient and md.condition < CROSS_CHECK_MAX_CONDITION
        if well_conditioned:
            error = _relative_error(breakdown.enhanced, float(md.moment[0, 0]))
            tallies["two_path"].record(error <= CROSS_CHECK_RTOL, error / CROSS_CHECK_RTOL)
            if stats.a > 0.0:
                error = float(np.max(np.abs(block_inverse(stats) - np.linalg.inv(md.gamma))))
                error /= float(np.max(np.abs(np.linalg.inv(md.gamma))))
                tallies["block_inverse"].record(error <= BLOCK_INVERSE_RTOL, error / BLOCK_INVERSE_RTOL)
            else:
                tallies["block_inverse"].skip()
            _check_identities(instance, state_theta, breakdown.fisher, breakdown.enhanced, tallies)
        else:
            for name in ("two_path", "block_inverse", "x_opt_identities", "x_opt0_identities"):
                tallies[name].skip()

        if index < FINITE_DIFFERENCE_INSTANCES:
            _check_finite_difference(instance, tallies["finite_difference"])

        rank_one = all(v.shape[1] == 1 for v in basis.isometries)
        if state.is_pure and rank_one and breakdown.fisher > 1e-9 and stats.a > 0.0:
            error = _relative_error(stats.a * breakdown.fisher / 4.0, 1.0)
            tallies["pure_rank_one"].record(error <= IDENTITY_RTOL, error / IDENTITY_RTOL)
        else:
            tallies["pure_rank_one"].skip()

        if index < CEILING_INSTANCES:
            _check_ceiling(
                state_theta, H, basis, breakdown.enhanced, rng, tallies["ceiling"], tallies["local_maximum"]
            )

    checks = []
    for name, tally in tallies.items():
        logging.info(f"{name}: {tally.passed} passed, {tally.failed} failed, {tally.skipped} skipped")
        checks.append(CheckResult(name, tally.passed, tally.failed, tally.skipped, tally.worst))
    return VerificationReport(seed=seed, instances=instances, checks=checks)


def _check_identities(
    instance: RandomInstance,
    state_theta: QuantumState,
    fisher: float,
    enhanced: float,
    tallies: Dict[str, _Tally],
) -> None:
    """Var(X_opt) = -i<[X_opt, H]> = F + E and Var(X_opt,0) = -i<[X_opt,0, H]> = F."""
    state, H, basis, theta = instance
    for name, builder, target in (("x_opt_identities", x_opt, enhanced), ("x_opt0_identities", x_opt0, fisher)):
        operator = builder(state, H, basis, theta).operator
        moments = observable_moments(state_theta, H, operator)
        if target > 1e-12:
            error = max(_relative_error(moments.variance, target), _relative_error(moments.slope, target))
        else:
            error = abs(moments.variance) + abs(moments.slope)
        tallies[name].record(error <= IDENTITY_RTOL, error / IDENTITY_RTOL)


def verification_report(seed: int, instances: int = 1000, output: Optional[str] = None) -> VerificationReport:
    """Run the suite and optionally write the rendered report to ``output``."""
    report = run_verification(seed, instances)
    if output is not None:
        with open(output, "w") as f:
            f.write(report.render())
    return report
