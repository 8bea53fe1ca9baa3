from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtraj import fme_obe as fo
from qtraj.core import thermal_occupation
from qtraj.kraus import steady_state

couplings = st.floats(1e-3, 0.2)
detunings = st.floats(-0.05, 0.05)
temps = st.floats(0.05, 2.0)


class TestBlochSteadyState:
    @given(st.floats(0.05, 2.0), st.floats(-1.0, 1.0), st.floats(0.01, 1.0), temps, st.floats(0, 2 * math.pi))
    def test_closed_form_matches_liouvillian_null_vector(self, g, delta, gq, T, phi):
        n = thermal_occupation(1.0, T)
        pe, s = fo.obe_steady_state(g, delta, gq, n, phi)
        rho = fo.obe_steady_state_numeric(g, delta, gq, 1.0, T, phi)
        assert rho[0, 0].real == pytest.approx(pe, abs=1e-10)
        assert rho[0, 1] == pytest.approx(s, abs=1e-10)

    def test_undriven_is_thermal(self):
        n = thermal_occupation(1.0, 0.7)
        pe, s = fo.obe_steady_state(0.0, 0.3, 1.0, n)
        assert pe == pytest.approx(n / (2 * n + 1))
        assert s == 0

    def test_long_time_evolution_reaches_steady_state(self):
        g, d, gq, T = 0.5, 0.1, 0.2, 0.5
        rho0 = np.diag([0.0, 1.0]).astype(complex)
        H = fo.rabi_hamiltonian(g, d)
        rho_t = fo.evolve_static(rho0, H, fo.obe_lindblad_jumps(gq, 1.0, T), np.array([500.0]))[-1]
        assert np.allclose(rho_t, fo.obe_steady_state_numeric(g, d, gq, 1.0, T), atol=1e-9)


class TestFloquetRates:
    @given(couplings, detunings, temps)
    def test_sideband_detailed_balance(self, g, delta, T):
        r = fo.floquet_rates(g, delta, 1.0, T, 1e-3)
        W = fo.dressed_frame(g, delta).Omega_R
        n1, n2, n0 = (thermal_occupation(w, T) for w in (1.0 + W, 1.0 - W, 1.0))
        assert r.g1_up * (n1 + 1) == pytest.approx(r.g1_down * n1, rel=1e-12, abs=1e-300)
        assert r.g2_down * (n2 + 1) == pytest.approx(r.g2_up * n2, rel=1e-12, abs=1e-300)
        assert r.g0_up * (n0 + 1) == pytest.approx(r.g0_down * n0, rel=1e-12, abs=1e-300)

    def test_lower_sideband_must_be_positive(self):
        with pytest.raises(ValueError):
            fo.floquet_rates(3.0, 0.0, 1.0, 0.1)

    @given(couplings, detunings, temps)
    def test_lindblad_steady_state_matches_rate_equation(self, g, delta, T):
        rates = fo.floquet_rates(g, delta, 1.0, T, 1e-3)
        frame = fo.dressed_frame(g, delta)
        rho = steady_state(fo.fme_effective_hamiltonian(frame), fo.fme_lindblad_jumps(rates, frame))
        pp, pm = fo.fme_steady_populations(rates)
        assert np.vdot(frame.plus, rho @ frame.plus).real == pytest.approx(pp, abs=1e-9)
        assert np.vdot(frame.minus, rho @ frame.minus).real == pytest.approx(pm, abs=1e-9)

    @given(couplings, detunings)
    def test_outcome_energies_close_the_first_law(self, g, delta):
        """Bath heat plus laser energy equals the dressed-energy change of each jump."""
        frame = fo.dressed_frame(g, delta)
        W = frame.Omega_R
        dE = {0: 0.0, 1: -W, 2: W, 3: -W, 4: W, 5: 0.0, 6: 0.0}
        for k, (dq, dl) in fo.fme_outcome_energies(1.0, W).items():
            assert dq + dl == pytest.approx(dE[k], abs=1e-14)

    def test_invalid_outcome(self):
        rates = fo.floquet_rates(0.05, 0.01, 1.0, 0.1, 1e-3)
        frame = fo.dressed_frame(0.05, 0.01)
        with pytest.raises(ValueError):
            fo.fme_heat_increments(7, frame.plus, rates, 1.0, frame.Omega_R, 1.0, frame)

    def test_coarse_graining_flag(self):
        assert fo.coarse_grained(1.0, 20.0)
        assert not fo.coarse_grained(1.0, 1.0)


class TestSteadyFlows:
    @given(couplings, detunings, temps, st.sampled_from(["OBE", "FME"]))
    def test_power_balance(self, g, delta, T, desc):
        f = fo.steady_flows(g, delta, 1.0, 1e-3, T, desc)
        assert abs(f.balance) <= 1e-12 * max(abs(f.P_L), 1e-300) + 1e-18

    def test_unknown_description(self):
        with pytest.raises(ValueError):
            fo.steady_flows(0.05, 0.01, 1.0, 1e-3, 0.1, "Redfield")

    def test_sweep_columns_and_real_coherence(self):
        rows = fo.compare_sweep(20)
        assert set(rows[0]) == set(fo.COMPARE_COLUMNS)
        assert all(abs(r["re_s"]) < 1e-15 for r in rows)
        thetas = [r["theta"] for r in rows]
        assert np.all(np.diff(thetas) > 0)

    def test_descriptions_agree_at_weak_damping(self):
        rows = fo.compare_sweep(20)
        for r in rows:
            assert r["Pe_fme"] == pytest.approx(r["Pe_obe"], rel=0.01)
            assert r["PL_fme"] == pytest.approx(r["PL_obe"], rel=0.02)
