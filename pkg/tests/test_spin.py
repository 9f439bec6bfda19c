"""Tests for the spin module."""

import numpy as np
import pytest

from fisherplus.bounds import quantum_fisher
from fisherplus.quantum import expectation, variance
from fisherplus.spin import (
    coherent_state_z,
    jy_basis,
    jz_basis,
    make_spin_operators,
    oat_state,
    rotate,
    spin_component,
    spin_length_of,
    validate_spin_length,
)
from fisherplus.verify import random_pure_state


class TestValidateSpinLength:
    """Tests for the validate_spin_length function."""

    @pytest.mark.parametrize("j", [0.5, 1, 2.5, 25, 100])
    def test_half_integers_accepted(self, j: float) -> None:
        """Test that positive half-integers pass through."""
        assert validate_spin_length(j) == j

    @pytest.mark.parametrize("j", [0, -1, 0.3, 2.25, float("nan"), float("inf")])
    def test_invalid_rejected(self, j: float) -> None:
        """Test that anything else raises ValueError."""
        with pytest.raises(ValueError, match="half-integer"):
            validate_spin_length(j)


class TestMakeSpinOperators:
    """Tests for the make_spin_operators function."""

    @pytest.mark.parametrize("j", [0.5, 1, 3.5, 10])
    def test_commutation_relations(self, j: float) -> None:
        """Test [Jx, Jy] = i Jz."""
        spin = make_spin_operators(j)
        jx, jy, jz = spin.jx.matrix, spin.jy.matrix, spin.jz.matrix
        np.testing.assert_allclose(jx @ jy - jy @ jx, 1j * jz, atol=1e-10)

    @pytest.mark.parametrize("j", [0.5, 2, 25])
    def test_casimir(self, j: float) -> None:
        """Test J^2 = j(j+1)."""
        spin = make_spin_operators(j)
        total = sum(op.matrix @ op.matrix for op in spin.components.values())
        np.testing.assert_allclose(total, j * (j + 1) * np.eye(spin.dim), atol=1e-9)

    def test_spin_half_is_pauli_over_two(self) -> None:
        """Test that j = 1/2 reproduces sigma/2."""
        spin = make_spin_operators(0.5)
        np.testing.assert_allclose(spin.jx.matrix, [[0, 0.5], [0.5, 0]], atol=1e-15)
        np.testing.assert_allclose(spin.jy.matrix, [[0, -0.5j], [0.5j, 0]], atol=1e-15)
        np.testing.assert_allclose(spin.jz.matrix, [[0.5, 0], [0, -0.5]], atol=1e-15)

    def test_dimensions(self) -> None:
        """Test dim = 2j + 1 and N = 2j."""
        spin = make_spin_operators(25)
        assert spin.dim == 51
        assert spin.particles == 50
        np.testing.assert_allclose(spin.magnetic_numbers[[0, -1]], [25, -25])

    def test_spin_length_of(self) -> None:
        """Test recovering j from the dimension."""
        assert spin_length_of(51) == 25
        with pytest.raises(ValueError):
            spin_length_of(1)


class TestStates:
    """Tests for the coherent and twisted states."""

    def test_coherent_state_polarized_along_z(self) -> None:
        """Test <Jz> = j and Var(Jx) = Var(Jy) = j/2."""
        spin = make_spin_operators(5)
        state = coherent_state_z(5)
        assert expectation(state, spin.jz.matrix).real == pytest.approx(5.0)
        assert variance(state, spin.jx.matrix) == pytest.approx(2.5)
        assert variance(state, spin.jy.matrix) == pytest.approx(2.5)

    def test_oat_at_zero_is_coherent(self) -> None:
        """Test that no twisting leaves the coherent state."""
        state = oat_state(10, 0.0)
        assert abs(np.vdot(coherent_state_z(10).vector, state.vector)) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("j", [0.5, 1, 2.5, 10, 25, 100])
    def test_oat_norm_and_mean_jy_over_twisting_grid(self, j: float) -> None:
        """Test that the twist keeps the norm and leaves <J_y> at its coherent value for tau sqrt(j) in [0, 3]."""
        spin = make_spin_operators(j)
        coherent_mean = expectation(coherent_state_z(j), spin.jy.matrix).real
        for tau_scaled in np.linspace(0.0, 3.0, 7):
            state = oat_state(j, tau_scaled / np.sqrt(j))
            assert abs(np.vdot(state.vector, state.vector).real - 1.0) <= 1e-12
            assert expectation(state, spin.jy.matrix).real == pytest.approx(coherent_mean, abs=1e-10 * max(1.0, j))

    def test_oat_mean_spin(self) -> None:
        """Test <Jz> = j cos^(2j-1)(tau) for the twisted state."""
        j, tau = 10, 0.2
        spin = make_spin_operators(j)
        mean = expectation(oat_state(j, tau), spin.jz.matrix).real
        assert mean == pytest.approx(j * np.cos(tau) ** (2 * j - 1), rel=1e-10)

    def test_oat_rejects_infinite_tau(self) -> None:
        """Test that a non-finite twisting time raises."""
        with pytest.raises(ValueError, match="finite"):
            oat_state(5, float("inf"))

    def test_quantum_fisher_plateau(self) -> None:
        """Test F_Q = 4 Var(Jz) approaches j(2j+1) once the state has spread around the equator."""
        j = 25
        fisher = quantum_fisher(oat_state(j, 3.0 / np.sqrt(j)), make_spin_operators(j).jz)
        assert fisher == pytest.approx(j * (2 * j + 1), rel=2e-2)

    def test_cat_revival(self) -> None:
        """Test that tau = pi/2 gives the Heisenberg value 4j^2 for integer j."""
        j = 25
        fisher = quantum_fisher(oat_state(j, np.pi / 2), make_spin_operators(j).jz)
        assert fisher == pytest.approx(4 * j**2, rel=1e-8)


class TestBases:
    """Tests for the J_y and J_z projective bases."""

    def test_jy_basis_diagonalizes_jy(self) -> None:
        """Test that every J_y projector is an eigenprojector with its label as eigenvalue."""
        j = 3
        spin = make_spin_operators(j)
        basis = jy_basis(j)
        for label, isometry in zip(basis.labels, basis.isometries):
            np.testing.assert_allclose(spin.jy.matrix @ isometry, label * isometry, atol=1e-10)

    def test_jy_labels_ascending(self) -> None:
        """Test the labels run m_y = -j, ..., j."""
        assert jy_basis(2).labels == (-2.0, -1.0, 0.0, 1.0, 2.0)

    def test_jz_basis_labels(self) -> None:
        """Test the J_z basis is the identity labeled m = j, ..., -j."""
        basis = jz_basis(1)
        assert basis.labels == (1.0, 0.0, -1.0)
        np.testing.assert_allclose(basis.stacked, np.eye(3))

    def test_rotation_maps_jz_to_jy_readout(self) -> None:
        """Test that rotating by pi/2 about x and reading J_z reproduces the J_y statistics."""
        j = 3
        rng = np.random.default_rng(5)
        states = [oat_state(j, 0.4)] + [random_pure_state(int(2 * j + 1), rng) for _ in range(20)]
        for state in states:
            direct = np.abs(jy_basis(j).stacked.conj().T @ state.vector) ** 2
            via_z = np.abs(rotate(state, "x", np.pi / 2).vector) ** 2
            by_label_y = dict(zip(jy_basis(j).labels, direct))
            by_label_z = dict(zip(jz_basis(j).labels, via_z))
            for m in by_label_y:
                assert by_label_y[m] == pytest.approx(by_label_z[m], abs=1e-12)

    @pytest.mark.parametrize("j", [1, 2.5, 4])
    @pytest.mark.parametrize("axis", ["x", "y", "z"])
    def test_full_turn(self, j: float, axis: str) -> None:
        """Test that a 2 pi rotation multiplies the state by (-1)^(2j) and keeps its norm."""
        state = random_pure_state(int(2 * j + 1), np.random.default_rng(9))
        turned = rotate(state, axis, 2 * np.pi)
        sign = (-1) ** int(round(2 * j))
        np.testing.assert_allclose(turned.vector, sign * state.vector, atol=1e-10)
        assert abs(np.vdot(turned.vector, turned.vector).real - 1.0) <= 1e-12

    def test_rotate_rejects_unknown_axis(self) -> None:
        """Test that only x, y and z are accepted."""
        with pytest.raises(ValueError, match="axis"):
            rotate(coherent_state_z(1), "w", 0.1)


class TestSpinComponent:
    """Tests for the spin_component function."""

    def test_axis_directions(self) -> None:
        """Test that unit vectors pick out the Cartesian components."""
        spin = make_spin_operators(2)
        np.testing.assert_allclose(spin_component(spin, np.array([0, 0, 1.0])).matrix, spin.jz.matrix)

    def test_diagonal_direction(self) -> None:
        """Test J_n for n = (1, 1, 0)/sqrt(2)."""
        spin = make_spin_operators(1)
        direction = np.array([1.0, 1.0, 0.0]) / np.sqrt(2)
        expected = (spin.jx.matrix + spin.jy.matrix) / np.sqrt(2)
        np.testing.assert_allclose(spin_component(spin, direction).matrix, expected, atol=1e-14)

    def test_bad_shape(self) -> None:
        """Test that a direction must have three components."""
        with pytest.raises(ValueError, match="three components"):
            spin_component(make_spin_operators(1), np.array([1.0, 0.0]))
