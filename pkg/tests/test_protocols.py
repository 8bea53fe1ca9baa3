from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtraj.core import thermal_occupation
from qtraj.protocols import (
    MPEParams, FeedbackParams, carnot_like_efficiency, enumerate_protocol, feedback_protocol, mpe_closed_forms,
    mpe_cycle_simulate, mpe_efficiency, mpe_power, readout_exact, readout_protocol, run_protocol,
    spont_no_jump_quantum_heat, spontaneous_emission_protocol, stark_shift_protocol, tilted_moment,
    zero_temperature_decay,
)


def short_stark(mu_over_gamma, hw_over_kT, steps=40, t_f=None):
    T = 1 / hw_over_kT
    gm = thermal_occupation(1.0, T) + 1
    t_f = t_f or 1 / gm
    return stark_shift_protocol(mu_over_gamma * gm, T, t_f=t_f, dt=t_f / steps)


class TestFluctuationTheorem:
    @given(st.floats(0.05, 20), st.floats(0.2, 5))
    def test_exact_integral_fluctuation_theorem(self, r, hw):
        assert tilted_moment(short_stark(r, hw), 1.0) == pytest.approx(1.0, abs=1e-10)

    @given(st.floats(0.05, 20), st.floats(0.2, 5))
    def test_enumeration_agrees_with_tilted_moment(self, r, hw):
        n0 = thermal_occupation(1.0, 1 / hw)
        spec = short_stark(r, hw, steps=4, t_f=0.1 / (2 * n0 + 1))
        assert enumerate_protocol(spec).ift() == pytest.approx(tilted_moment(spec), abs=1e-12)

    def test_jensen(self):
        ens = run_protocol(short_stark(5.0, 1.0), 20_000, 1)
        assert np.mean(ens.entropy) > 0

    def test_second_law_for_work(self):
        spec = short_stark(5.0, 1.0)
        ens = run_protocol(spec, 20_000, 1)
        w = ens.W.mean()
        assert w >= spec.delta_F - 4 * ens.W.std() / math.sqrt(ens.n_traj)

    def test_same_seed_same_ensemble(self):
        spec = short_stark(1.0, 1.0)
        a, b = run_protocol(spec, 500, 1), run_protocol(spec, 500, 1)
        c = run_protocol(spec, 500, 2)
        assert np.array_equal(a.entropy, b.entropy)
        assert not np.array_equal(a.entropy, c.entropy)


class TestReadout:
    @given(st.floats(0.01, math.pi - 0.01))
    def test_irreversibility_closed_form(self, theta):
        ex = readout_exact(theta)
        assert ex["p_bar"] == pytest.approx(ex["p_bar_closed_form"], abs=1e-14)
        assert ex["ift"] == pytest.approx(1 - math.sin(theta) ** 2 / 2, abs=1e-14)

    def test_quantum_heat_has_zero_mean(self):
        r = readout_protocol(math.pi / 3, 50_000, 1)
        assert abs(r.quantum_heat.mean()) < 4 * r.quantum_heat.std() / math.sqrt(50_000)


class TestSpontaneousEmission:
    @given(st.floats(0.5, 10))
    def test_no_jump_heat_limit(self, tf):
        q = spont_no_jump_quantum_heat(1.0, tf)
        assert -0.5 < q < 0
        assert spont_no_jump_quantum_heat(1.0, 40.0) == pytest.approx(-0.5, abs=1e-15)

    @given(st.floats(1e-3, 0.04))
    def test_no_jump_heat_matches_discrete_decay(self, dt):
        # the exact Kraus step damps |e> by sqrt(1 - gamma dt), i.e. at rate -ln(1 - gamma dt) / dt
        spec = spontaneous_emission_protocol(1.0, 4.0, dt=dt)
        ens = run_protocol(spec, 200, 1)
        nj = ens.Q_q[ens.n_jumps == 0]
        h = spec.model.dt
        assert np.allclose(nj, spont_no_jump_quantum_heat(-math.log1p(-h) / h, spec.duration), atol=1e-12)

    def test_first_order_kraus_option(self):
        spec = zero_temperature_decay(first_order=True, t_f=0.5)
        ens = run_protocol(spec, 2000, 1)
        assert np.all(ens.n_jumps <= 1)


axes = st.sampled_from([(math.pi / 2, 0.0), (0.0, 0.0), (math.pi / 2, math.pi / 2), (math.pi / 4, 0.0),
                        (1.0, 0.7)])


class TestEngineCycle:
    @given(axes, st.floats(0.05, math.pi - 0.05))
    def test_closed_form_consistency(self, ax, th):
        p = MPEParams(n_axis=ax, rabi_angle=th)
        cf = mpe_closed_forms(p)
        assert cf["net_work"] == pytest.approx(cf["power"] * th / p.g, abs=1e-12)
        assert 0 <= cf["p_minus"] <= 1

    @given(axes, st.floats(0.05, math.pi - 0.05))
    def test_first_law_per_cycle(self, ax, th):
        c = mpe_cycle_simulate(MPEParams(n_axis=ax, rabi_angle=th), 200, 1)
        # every cycle returns to |+_n>: -W_ext + Q_q + W_fb = 0
        assert np.allclose(c.Q_q - c.W_ext + c.W_fb, 0.0, atol=1e-12)

    @given(st.floats(0.05, math.pi - 0.05), st.floats(0.01, 0.3))
    def test_efficiency_from_closed_forms(self, th, T_C):
        cf = mpe_closed_forms(MPEParams(rabi_angle=th, T_C=T_C))
        assert mpe_efficiency(th, 1.0, T_C) == pytest.approx(1 - T_C * cf["memory_entropy"] / cf["mean_Qq"], abs=1e-12)

    def test_quarter_turn_reaches_thermal_engine(self):
        assert mpe_efficiency(math.pi / 2, 1.0, 0.1) == pytest.approx(carnot_like_efficiency(1.0, 0.1), abs=1e-15)

    def test_finite_durations_reduce_power(self):
        ideal, real = mpe_power((math.pi / 2, 0.0), 1.0, 1.0, 1.0, tau_m=0.5, tau_fb=0.5)
        assert 0 < real < ideal

    def test_invalid_angle(self):
        with pytest.raises(ValueError):
            MPEParams(rabi_angle=0.0)


class TestFeedback:
    def test_unbounded_feedback_holds_target(self):
        r = feedback_protocol(FeedbackParams(duration=20.0), 50, 1)
        assert r.fidelity == pytest.approx(1.0, abs=1e-9)

    def test_cutoff_lets_state_diffuse(self):
        free = feedback_protocol(FeedbackParams(duration=50.0, w_cutoff=0.0), 200, 1)
        held = feedback_protocol(FeedbackParams(duration=50.0), 200, 1)
        assert free.fidelity < held.fidelity
        assert np.all(free.cum_work == 0)
