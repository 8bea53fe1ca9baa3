from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtraj.core import (
    PROJ_E, SIGMA_X, SIGMA_Z, QubitState, bloch_state, bloch_vector, dressed_basis, free_energy,
    orthogonal_state, shannon_entropy, thermal_excited_population, thermal_occupation, validate_density,
    von_neumann_entropy,
)

angles = st.floats(0.05, math.pi - 0.05)
phases = st.floats(-math.pi + 0.01, math.pi - 0.01)


class TestStates:
    @given(angles, phases)
    def test_bloch_angles_round_trip(self, theta, phi):
        th, ph = bloch_state(theta, phi).bloch_angles()
        assert th == pytest.approx(theta, abs=1e-12)
        assert ph == pytest.approx(phi, abs=1e-12)

    @given(angles, phases)
    def test_orthogonal_state(self, theta, phi):
        s = bloch_state(theta, phi)
        assert abs(np.vdot(s.vector, orthogonal_state(s).vector)) < 1e-14

    @given(angles, phases)
    def test_bloch_vector_matches_angles(self, theta, phi):
        v = bloch_vector(bloch_state(theta, phi))
        # the relative phase sits on |e>, so <sigma_y> carries -sin(phi)
        ref = [math.sin(theta) * math.cos(phi), -math.sin(theta) * math.sin(phi), math.cos(theta)]
        assert np.allclose(v, ref, atol=1e-12)

    def test_unnormalized_rejected(self):
        with pytest.raises(ValueError):
            QubitState(1.0, 1.0)
        with pytest.raises(ValueError):
            QubitState.from_vector([0, 0])

    @given(angles, phases, st.floats(0, 2 * math.pi))
    def test_equality_ignores_global_phase(self, theta, phi, chi):
        s = bloch_state(theta, phi)
        t = QubitState.from_vector(np.exp(1j * chi) * s.vector)
        assert s.equals(t)
        assert np.allclose(s.canonical(), t.canonical())


class TestThermal:
    @given(st.floats(0.01, 10), st.floats(0.01, 100))
    def test_population_from_occupation(self, w, T):
        n = thermal_occupation(w, T)
        assert thermal_excited_population(w, T) == pytest.approx(n / (2 * n + 1), rel=1e-12)

    @given(st.floats(0.01, 10), st.floats(0.01, 100))
    def test_free_energy_is_minus_T_log_Z(self, w, T):
        assert free_energy(w, T) == pytest.approx(-T * math.log(1 + math.exp(-w / T)), rel=1e-12)

    def test_zero_temperature(self):
        assert thermal_occupation(1.0, 0.0) == 0.0
        assert thermal_excited_population(1.0, 0.0) == 0.0

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            thermal_occupation(-1.0, 1.0)
        with pytest.raises(ValueError):
            thermal_occupation(1.0, -1.0)

    @given(st.floats(0, 1))
    def test_shannon_symmetric_and_bounded(self, p):
        h = shannon_entropy(p)
        assert h == pytest.approx(shannon_entropy(1 - p), abs=1e-15)
        assert 0 <= h <= math.log(2) + 1e-15

    @given(st.floats(0.01, 0.99))
    def test_von_neumann_of_diagonal_state(self, p):
        assert von_neumann_entropy(np.diag([p, 1 - p])) == pytest.approx(shannon_entropy(p), abs=1e-12)


class TestDressedBasis:
    @given(st.floats(0.01, 5), st.floats(-5, 5))
    def test_diagonalizes_rabi_hamiltonian(self, g, delta):
        d = dressed_basis(g, delta)
        h = 0.5 * delta * SIGMA_Z + 0.5 * g * SIGMA_X
        u = d.unitary()
        assert np.allclose(u.conj().T @ h @ u, np.diag([d.eps_plus, d.eps_minus]), atol=1e-12)
        assert d.rabi_freq == pytest.approx(math.hypot(g, delta))

    def test_undefined_without_drive_or_detuning(self):
        with pytest.raises(ValueError):
            dressed_basis(0.0, 0.0)


def test_validate_density_rejects_bad_matrices():
    with pytest.raises(ValueError):
        validate_density(np.diag([0.5, 0.6]))
    with pytest.raises(ValueError):
        validate_density(np.diag([1.5, -0.5]))
    assert np.allclose(validate_density(PROJ_E), PROJ_E)
