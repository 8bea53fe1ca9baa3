from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtraj import rng as qrng
from qtraj.core import PROJ_E, SIGMA_MINUS, SIGMA_PLUS, SIGMA_Z, bloch_state
from qtraj.fme_obe import evolve_static, obe_lindblad_jumps, obe_steady_state, rabi_hamiltonian
from qtraj.kraus import (
    integrate_lindblad, kraus_from_generator, lindblad_rhs, outcome_probabilities, qj_step, qsd_step,
    steady_state, thermal_kraus_set,
)

rates = st.floats(0.01, 2.0)
occ = st.floats(0.0, 3.0)


class TestKrausSets:
    @given(rates, occ, st.floats(0.1, 3.0), st.floats(1e-4, 5e-3))
    def test_exact_set_is_complete(self, gamma, n, w, dt):
        k = thermal_kraus_set(gamma, n, w * PROJ_E, dt)
        assert k.completeness_residual() <= 1e-8 * dt
        assert k.labels == [0, 1, 2]

    @given(rates, occ, st.floats(1e-4, 5e-3))
    def test_first_order_set_is_nearly_complete(self, gamma, n, dt):
        k = thermal_kraus_set(gamma, n, PROJ_E, dt, first_order=True)
        assert k.completeness_residual() <= 4 * ((gamma * (2 * n + 1) + 1) * dt) ** 2 + 1e-14

    def test_large_step_rejected(self):
        with pytest.raises(ValueError, match="step too large"):
            thermal_kraus_set(1.0, 0.0, PROJ_E, 0.5)

    def test_non_hermitian_hamiltonian_rejected(self):
        with pytest.raises(ValueError):
            kraus_from_generator(SIGMA_MINUS, [(1, 1.0, SIGMA_MINUS)], 1e-3)

    @given(st.floats(0.1, 3.0), st.floats(-3, 3))
    def test_outcome_probabilities_sum_to_one(self, theta, phi):
        k = thermal_kraus_set(1.0, 0.5, PROJ_E, 1e-2)
        assert outcome_probabilities(bloch_state(theta, phi), k).sum() == pytest.approx(1.0, abs=1e-12)

    def test_jump_lands_in_ground_state(self):
        k = kraus_from_generator(PROJ_E, [(1, 1.0, SIGMA_MINUS)], 0.04)
        rng = np.random.default_rng(0)
        s = bloch_state(1.0, 0.0)
        for _ in range(200):
            t, lab = qj_step(s, k, rng)
            if lab == 1:
                assert t.p_g == pytest.approx(1.0)
                break
        else:
            pytest.fail("no emission in 200 steps")


class TestLindblad:
    @given(st.floats(0.1, 2.0), st.floats(-1, 1), st.floats(0.1, 3.0))
    def test_integrator_matches_matrix_exponential(self, g, delta, T):
        rho0 = bloch_state(1.0, 0.5).density()
        H = rabi_hamiltonian(g, delta)
        J = obe_lindblad_jumps(0.5, 1.0, T)
        ts = np.linspace(0, 3, 7)
        a = integrate_lindblad(rho0, lambda t: H, lambda t: J, ts)
        b = evolve_static(rho0, H, J, ts)
        assert np.max(np.abs(a - b)) < 1e-7  # fourth-order steps of 0.025

    @given(st.floats(0.05, 2.0), st.floats(-1, 1), st.floats(0.1, 3.0))
    def test_steady_state_closed_form(self, g, delta, T):
        from qtraj.core import thermal_occupation

        rho = steady_state(rabi_hamiltonian(g, delta), obe_lindblad_jumps(0.3, 1.0, T))
        pe, s = obe_steady_state(g, delta, 0.3, thermal_occupation(1.0, T))
        assert rho[0, 0].real == pytest.approx(pe, abs=1e-10)
        assert rho[0, 1] == pytest.approx(s, abs=1e-10)  # s = <sigma_-> = rho_eg

    def test_rhs_is_traceless_and_hermitian(self):
        rho = bloch_state(0.7, 0.2).density()
        d = lindblad_rhs(rho, SIGMA_Z, [(1.0, SIGMA_MINUS), (0.3, SIGMA_PLUS)])
        assert abs(np.trace(d)) < 1e-14
        assert np.allclose(d, d.conj().T)


class TestDiffusiveStep:
    def test_readout_statistics(self):
        # the record increments carry <X> plus white noise of variance 1/(4 gamma dt)
        g, dt = 0.5, 1e-3
        s = bloch_state(math.pi / 3, 0.0)
        rng = np.random.default_rng(1)
        reads = np.array([qsd_step(s, SIGMA_Z, 0 * SIGMA_Z, g, dt, rng)[1] for _ in range(4000)])
        assert reads.mean() == pytest.approx(math.cos(math.pi / 3), abs=4 * math.sqrt(1 / (4 * g * dt) / 4000))

    def test_step_too_large(self):
        with pytest.raises(ValueError):
            qsd_step(bloch_state(1.0, 0.0), SIGMA_Z, SIGMA_Z, 1.0, 0.1, np.random.default_rng(0))


def test_counter_streams_are_reproducible():
    k = qrng.derive(7, np.arange(5))
    assert np.array_equal(qrng.uniforms(k, 3, 1), qrng.uniforms(k, 3, 1))
    assert not np.array_equal(qrng.uniforms(k, 3, 1), qrng.uniforms(k, 3, 2))
    u = qrng.uniforms(qrng.derive(1, np.arange(100_000)), 0, 1)
    assert 0 < u.min() and u.max() < 1
    assert abs(u.mean() - 0.5) < 4 * math.sqrt(1 / 12 / len(u))
