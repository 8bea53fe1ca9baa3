from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtraj import optomech as om
from qtraj.core import thermal_occupation
from qtraj.fme_obe import obe_steady_state


class TestNoiseRate:
    @given(st.floats(-5, 5), st.floats(0.1, 10), st.floats(0.2, 3))
    def test_zero_temperature_closed_form(self, delta, g, gq):
        p = om.OptomechParams(g=g, gamma_q=gq, T=0.0)
        assert om.gamma_opt(delta, p) == pytest.approx(om.gamma_opt_zero_temperature(delta, g, 0.1, gq), rel=1e-9)

    @given(st.floats(2e3, 1e5), st.floats(0.2, 3))
    def test_undriven_closed_form(self, T, gq):
        p = om.OptomechParams(g=0.0, gamma_q=gq, T=T)
        n = thermal_occupation(p.omega_0, T)
        assert om.gamma_opt(0.0, p) == pytest.approx(om.gamma_opt_undriven(n, 0.1, gq), rel=1e-9)

    def test_rate_is_nonnegative_on_a_sweep(self):
        p = om.OptomechParams(g=5.0)
        assert min(om.gamma_opt(d, p) for d in np.linspace(-20, 20, 81)) >= 0

    @given(st.floats(-30, 30), st.floats(0.1, 10))
    def test_adiabatic_population_is_bloch_steady_state(self, x, g):
        p = om.OptomechParams(g=g, T=3e3)
        pe, _ = obe_steady_state(g, p.detuning(x), p.gamma_q, p.occupation(x))
        assert om.adiabatic_population(p, x) == pytest.approx(pe, rel=1e-12)


class TestSemiclassical:
    def test_battery_identity(self):
        p = om.OptomechParams(omega_0=1e4, Omega_m=0.01, g_m=0.1, g=0.0, T=3e4)
        run = om.semiclassical_run(om.thermal_start(p, 500j), p, 0.5 * math.pi / p.Omega_m, stride=50)
        W, dU = om.battery_work_check(run)
        assert abs(W) > 1.0
        assert abs(W + dU) <= 1e-5 * abs(W)

    def test_battery_check_needs_undriven_qubit(self):
        p = om.OptomechParams(g=1.0)
        run = om.semiclassical_run(om.thermal_start(p, 1j), p, 0.1)
        with pytest.raises(ValueError):
            om.battery_work_check(run)

    def test_dt_limit(self):
        p = om.OptomechParams()
        with pytest.raises(ValueError):
            om.semiclassical_run(om.thermal_start(p, 0j), p, 1.0, dt=0.1)

    def test_invalid_state(self):
        with pytest.raises(ValueError):
            om.HybridSemiclassicalState(0.5, 0.6 + 0j, 0j)

    @given(st.floats(-100, 100), st.floats(1e3, 1e5))
    def test_reversible_first_law(self, x_f, T):
        w0, gm = 1e4, 0.1
        pe = lambda w: 1 / (1 + math.exp(w / T))
        dU = (w0 + gm * x_f) * pe(w0 + gm * x_f) - w0 * pe(w0)
        W = om.reversible_work(x_f, w0, gm, T)
        Q = om.reversible_heat(x_f, w0, gm, T)
        assert W + Q == pytest.approx(dU, abs=1e-9 * max(1.0, abs(dU)) + 1e-9)

    def test_shannon_limits(self):
        assert om.shannon([0.0, 1.0, 0.5]) == pytest.approx([0.0, 0.0, math.log(2)])


class TestGaussian:
    @given(st.complex_numbers(max_magnitude=10), st.floats(0.01, 2))
    def test_ensemble_diffusion(self, beta, G):
        """V_X + V_P grows at 4 Gamma: rotation only exchanges the two variances."""
        Om = 0.05
        t, m = om.gaussian_ensemble_run(om.GaussianMOState.coherent(beta), lambda t, x: G, Om, 20.0)
        assert m[-1, 2] + m[-1, 3] - 2 == pytest.approx(4 * G * t[-1], rel=1e-9)
        assert m[-1, 0] ** 2 + m[-1, 1] ** 2 == pytest.approx(4 * abs(beta) ** 2, rel=1e-9, abs=1e-12)

    @given(st.complex_numbers(max_magnitude=10), st.floats(0.01, 2))
    def test_monitoring_keeps_states_pure(self, beta, G):
        _, m = om.gaussian_qsd_ensemble(om.GaussianMOState.coherent(beta), G, 0.05, 30.0, 3, seed=1)
        v = m[-1]
        assert np.allclose(4 * v[:, 2] * v[:, 3] - v[:, 4] ** 2, 4.0, rtol=1e-8)

    def test_qsd_is_deterministic_per_seed(self):
        s = om.GaussianMOState.coherent(2j)
        a = om.gaussian_qsd_ensemble(s, 0.3, 0.05, 10.0, 4, seed=1)[1]
        b = om.gaussian_qsd_ensemble(s, 0.3, 0.05, 10.0, 4, seed=1)[1]
        assert np.array_equal(a, b)

    def test_wigner_normalized(self):
        s = om.GaussianMOState(0.5, -1.0, 1.7, 0.9, 0.4)
        u = np.linspace(-12, 12, 481)
        U, V = np.meshgrid(u, u, indexing="ij")
        du = u[1] - u[0]
        assert s.wigner(U, V).sum() * du * du == pytest.approx(1.0, abs=1e-6)

    def test_coherent_state(self):
        s = om.GaussianMOState.coherent(1.5 - 0.5j)
        assert s.uncertainty == 4.0
        assert s.phonons == pytest.approx(abs(1.5 - 0.5j) ** 2)

    def test_rejects_bad_variance(self):
        with pytest.raises(ValueError):
            om.GaussianMOState(0, 0, -1.0, 1.0)

    def test_step_size_limit(self):
        with pytest.raises(ValueError):
            om.gaussian_qsd_step(om.GaussianMOState(0, 0), 0.1, 0.05, 1.0, dw=0.0)
