"""Tests for the observables module."""

from typing import List

import numpy as np
import pytest

from fisherplus.bounds import enhanced_sensitivity, observable_moments
from fisherplus.clock import find_tau_opt
from fisherplus.moments import moment_data, reduced_family
from fisherplus.observables import (
    ObservableCoefficients,
    ablated_observable,
    linear_observable,
    linear_observable_expectation,
    normalize_coefficients,
    x_opt,
    x_opt0,
)
from fisherplus.quantum import expectation, phase_evolve
from fisherplus.spin import jy_basis, make_spin_operators, oat_state
from fisherplus.verify import RandomInstance

WELL_CONDITIONED = 1e6


def _well_conditioned(instance: RandomInstance, optimal) -> bool:
    stats = optimal.stats
    if not np.all(stats.kept) or stats.a == 0.0:
        return False
    state_theta = phase_evolve(instance.state, instance.H, instance.theta)
    md = moment_data(state_theta, reduced_family(instance.H, instance.basis, stats))
    return not md.rank_deficient and md.condition < WELL_CONDITIONED


class TestObservableCoefficients:
    """Tests for ObservableCoefficients and normalize_coefficients."""

    def test_length_must_match_labels(self) -> None:
        """Test that every label needs one coefficient."""
        with pytest.raises(ValueError, match="projector coefficients"):
            ObservableCoefficients(c_h=0.0, c_x=np.array([1.0, 2.0]), labels=(0, 1, 2))

    def test_normalized_flag_is_checked(self) -> None:
        """Test that coefficients flagged as normalized must have unit norm."""
        with pytest.raises(ValueError, match="norm"):
            ObservableCoefficients(c_h=1.0, c_x=np.array([1.0]), labels=("a",), normalized=True)

    def test_normalize(self) -> None:
        """Test unit norm, the sign convention and the scaled offset."""
        raw = ObservableCoefficients(c_h=0.0, c_x=np.array([-3.0, 0.0]), labels=(0, 1), offset=6.0)
        normalized = normalize_coefficients(raw)
        assert normalized.normalized
        assert normalized.norm == pytest.approx(1.0)
        np.testing.assert_allclose(normalized.c_x, [1.0, 0.0])
        assert normalized.offset == pytest.approx(-2.0)

    def test_normalize_zero(self) -> None:
        """Test that the zero vector cannot be normalized."""
        with pytest.raises(ValueError, match="all-zero"):
            normalize_coefficients(ObservableCoefficients(c_h=0.0, c_x=np.zeros(2), labels=(0, 1)))

    def test_by_label(self) -> None:
        """Test the label to coefficient mapping."""
        coefficients = ObservableCoefficients(c_h=0.5, c_x=np.array([1.0, -1.0]), labels=("up", "down"))
        assert coefficients.by_label() == {"up": 1.0, "down": -1.0}


class TestLinearObservable:
    """Tests for linear_observable and linear_observable_expectation."""

    def test_expectation_without_forming_x(self, random_instances: List[RandomInstance], rng) -> None:
        """Test that <X> from p and <H> matches Tr(rho X)."""
        for instance in random_instances:
            state_theta = phase_evolve(instance.state, instance.H, instance.theta)
            coefficients = ObservableCoefficients(
                c_h=float(rng.normal()),
                c_x=rng.normal(size=instance.basis.size),
                labels=instance.basis.labels,
                offset=float(rng.normal()),
            )
            X = linear_observable(coefficients, instance.H, instance.basis)
            optimal = x_opt0(instance.state, instance.H, instance.basis, instance.theta)
            via_stats = linear_observable_expectation(coefficients, optimal.stats.p, optimal.stats.mean_h)
            assert via_stats == pytest.approx(expectation(state_theta, X.matrix).real, abs=1e-10)

    def test_basis_size_checked(self, sigma_z_half, sigma_x_basis) -> None:
        """Test that the coefficient count must match the basis."""
        coefficients = ObservableCoefficients(c_h=0.0, c_x=np.ones(3), labels=(0, 1, 2))
        with pytest.raises(ValueError, match="Expected 2"):
            linear_observable(coefficients, sigma_z_half, sigma_x_basis)

    def test_probability_count_checked(self) -> None:
        """Test that one probability is needed per coefficient."""
        coefficients = ObservableCoefficients(c_h=0.0, c_x=np.ones(2), labels=(0, 1))
        with pytest.raises(ValueError, match="probabilities"):
            linear_observable_expectation(coefficients, [1.0], 0.0)


class TestOptimalObservables:
    """Tests for x_opt0, x_opt and ablated_observable."""

    def test_qubit(self, plus_state, sigma_z_half, sigma_x_basis) -> None:
        """Test that X_opt,0 reaches F = 1 and X_opt carries no H term on the equator."""
        theta = 1.0
        state_theta = phase_evolve(plus_state, sigma_z_half, theta)
        plain = x_opt0(plus_state, sigma_z_half, sigma_x_basis, theta)
        moments = observable_moments(state_theta, sigma_z_half, plain.operator)
        assert moments.variance == pytest.approx(1.0, rel=1e-10)
        assert moments.slope == pytest.approx(1.0, rel=1e-10)
        assert x_opt(plus_state, sigma_z_half, sigma_x_basis, theta).coefficients.c_h == pytest.approx(0.0, abs=1e-14)

    def test_identities_on_random_instances(self, random_instances: List[RandomInstance]) -> None:
        """Test Var(X) = -i<[X, H]> = F + E for X_opt and = F for X_opt,0."""
        checked = 0
        for instance in random_instances:
            optimal = x_opt(instance.state, instance.H, instance.basis, instance.theta)
            if not _well_conditioned(instance, optimal):
                continue
            plain = x_opt0(instance.state, instance.H, instance.basis, instance.theta)
            breakdown = enhanced_sensitivity(instance.state, instance.H, instance.basis, instance.theta)
            state_theta = phase_evolve(instance.state, instance.H, instance.theta)

            moments = observable_moments(state_theta, instance.H, optimal.operator)
            assert moments.variance == pytest.approx(breakdown.enhanced, rel=1e-6)
            assert moments.slope == pytest.approx(breakdown.enhanced, rel=1e-6)

            moments = observable_moments(state_theta, instance.H, plain.operator)
            assert moments.variance == pytest.approx(breakdown.fisher, rel=1e-6)
            assert moments.slope == pytest.approx(breakdown.fisher, rel=1e-6)
            checked += 1
        assert checked > 0

    def test_normalized_coefficients(self, random_instances: List[RandomInstance]) -> None:
        """Test that the normalized coefficients are a unit vector with the largest entry positive."""
        for instance in random_instances:
            normalized = x_opt(instance.state, instance.H, instance.basis, instance.theta).normalized
            if normalized.norm == 0.0:
                continue
            stacked = np.concatenate(([normalized.c_h], normalized.c_x))
            assert normalized.norm == pytest.approx(1.0, abs=1e-12)
            assert stacked[np.argmax(np.abs(stacked))] > 0

    def test_ablated_never_beats_x_opt(self, random_instances: List[RandomInstance]) -> None:
        """Test that dropping the H term never raises chi^{-2} above F + E."""
        for instance in random_instances:
            breakdown = enhanced_sensitivity(instance.state, instance.H, instance.basis, instance.theta)
            ablated = ablated_observable(instance.state, instance.H, instance.basis, instance.theta)
            assert ablated.inverse_chi_squared <= breakdown.enhanced * (1 + 1e-8) + 1e-12

    @pytest.mark.slow
    def test_twisted_spin_at_optimum(self) -> None:
        """Test the H term of X_opt and the ablated sensitivity for j = 25 at tau_opt."""
        j = 25
        spin = make_spin_operators(j)
        tau = find_tau_opt(j).tau
        state, basis = oat_state(j, tau), jy_basis(j)

        optimal = x_opt(state, spin.jz, basis, 0.0)
        breakdown = enhanced_sensitivity(state, spin.jz, basis, 0.0)
        moments = observable_moments(state, spin.jz, optimal.operator)
        assert moments.variance == pytest.approx(breakdown.enhanced, rel=1e-6)
        assert abs(optimal.normalized.c_h) == pytest.approx(7.45e-3, rel=0.05)

        ablated = ablated_observable(state, spin.jz, basis, 0.0)
        assert ablated.inverse_chi_squared < breakdown.fisher
        assert observable_moments(state, spin.jz, ablated.operator).slope == pytest.approx(moments.slope, rel=1e-9)
        assert ablated.inverse_chi_squared / breakdown.fisher == pytest.approx(0.883, abs=0.02)
