from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtraj import rng as qrng
from qtraj.core import PROJ_E, SIGMA_MINUS, SIGMA_PLUS, bloch_state
from qtraj.engine import JumpChannel, build_model, channel_density, enumerate_paths, run_qj, run_qj_reference
from qtraj.fme_obe import obe_model
from qtraj.protocols import run_protocol, spontaneous_emission_protocol, stark_shift_protocol


def ramp_model(mu=0.5, T=1.0, dt=0.01, n=60):
    w = lambda t: 1.0 + mu * t
    from qtraj.protocols import thermal_channels

    return build_model(dt, n, lambda t: w(t) * PROJ_E, lambda t: w(t) * PROJ_E,
                       lambda t: thermal_channels(1.0, w(t), T))


def start(n, theta=1.1, phi=0.3):
    v = bloch_state(theta, phi).vector
    return np.full(n, v[0]), np.full(n, v[1])


class TestFirstLaw:
    @given(st.floats(0.0, 2.0), st.floats(0.2, 2.0), st.floats(0.1, 3.0))
    def test_closes_per_trajectory(self, mu, T, theta):
        m = ramp_model(mu, T)
        a, b = start(200, theta)
        r = run_qj(m, a, b, qrng.derive(3, np.arange(200)))
        resid = r.U_f - r.U_i - r.W - r.Q_cl - r.Q_q - r.Q_L
        assert np.max(np.abs(resid)) < 1e-12

    @given(st.floats(0.1, 2.0), st.floats(-1, 1))
    def test_closes_for_driven_qubit(self, g, delta):
        m = obe_model(g, delta, 1.0, 0.5, 0.5, 0.01, 50)
        a, b = start(100)
        r = run_qj(m, a, b, qrng.derive(5, np.arange(100)), record=True)
        resid = r.U_f - r.U_i - r.W - r.Q_cl - r.Q_q - r.Q_L
        assert np.max(np.abs(resid)) < 1e-12
        inc = sum(r.increments[k] for k in ("dW", "dQ_cl", "dQ_q", "dQ_L")).sum(axis=1)
        assert np.allclose(inc, r.U_f - r.U_i, atol=1e-12)


class TestDeterminism:
    def test_compiled_kernel_matches_reference(self):
        m = ramp_model()
        a, b = start(300)
        keys = qrng.derive(11, np.arange(300))
        fast = run_qj(m, a, b, keys, sample_steps=[10, 60], record=True)
        ref = run_qj_reference(m, a, b, keys, sample_steps=[10, 60], record=True)
        for k in ("W", "Q_cl", "Q_q", "log_prob", "U_f"):
            assert np.allclose(getattr(fast, k), getattr(ref, k), atol=1e-12), k
        assert np.array_equal(fast.outcomes, ref.outcomes)
        assert np.allclose(fast.rho_mean, ref.rho_mean, atol=1e-12)

    def test_independent_of_threads(self):
        m = ramp_model(n=5)
        n = 40_000  # more than two chunks
        a, b = start(n)
        keys = qrng.derive(1, np.arange(n))
        one = run_qj(m, a, b, keys, threads=1)
        two = run_qj(m, a, b, keys, threads=2)
        assert np.array_equal(one.W, two.W) and np.array_equal(one.Q_cl, two.Q_cl)

    def test_prefix_property(self):
        # trajectory i only depends on its own key
        m = ramp_model()
        a, b = start(500)
        keys = qrng.derive(2, np.arange(500))
        full = run_qj(m, a, b, keys)
        part = run_qj(m, a[:37], b[:37], keys[:37])
        assert np.array_equal(full.Q_q[:37], part.Q_q)


class TestEnumeration:
    @given(st.floats(0.0, 2.0), st.floats(0.3, 1.0))
    def test_total_probability(self, mu, T):
        m = ramp_model(mu, T, dt=0.02, n=4)
        pe = enumerate_paths(m, np.array([bloch_state(1.0, 0.2).vector, [0, 1]]), np.array([0.3, 0.7]))
        assert pe.prob.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(np.exp(pe.log_prob) * np.array([0.3, 0.7])[pe.init_index], pe.prob, rtol=1e-10)

    def test_channel_density_is_mean_of_enumeration(self):
        m = ramp_model(dt=0.02, n=4)
        psi = bloch_state(1.0, 0.2).vector
        pe = enumerate_paths(m, psi[None], np.array([1.0]))
        rho = np.einsum("p,pi,pj->ij", pe.prob, np.stack([pe.final_a, pe.final_b], 1),
                        np.stack([pe.final_a, pe.final_b], 1).conj())
        assert np.allclose(rho, channel_density(m, np.outer(psi, psi.conj()), [4])[0], atol=1e-14)


class TestRenewal:
    def test_matches_exact_jump_probability(self):
        g, tf = 1.0, 3.0
        spec = spontaneous_emission_protocol(g, tf, dt=0.01)
        ens = run_protocol(spec, 50_000, 1)
        p = float(np.mean(ens.n_jumps > 0))
        # discrete-time survival of the no-jump branch from |+>
        pe = enumerate_paths(spec.model, spec.init_states, spec.init_probs)
        exact = float(np.sum(pe.prob[(pe.paths != 0).any(axis=1)]))
        assert abs(p - exact) < 4 * math.sqrt(exact * (1 - exact) / 50_000)

    def test_rejects_time_dependent_model(self):
        spec = stark_shift_protocol(0.5, 1.0, t_f=0.5)
        spec.engine = "renewal"
        with pytest.raises(ValueError, match="renewal"):
            run_protocol(spec, 10, 1)


class TestModelValidation:
    def test_changing_labels_rejected(self):
        ch = lambda t: [JumpChannel(1 if t < 0.05 else 3, 1.0, SIGMA_MINUS)]
        with pytest.raises(ValueError, match="labels"):
            build_model(0.01, 10, PROJ_E, PROJ_E, ch)

    def test_large_step_rejected(self):
        with pytest.raises(ValueError, match="step too large"):
            build_model(0.1, 10, PROJ_E, PROJ_E, [JumpChannel(1, 1.0, SIGMA_MINUS), JumpChannel(2, 1.0, SIGMA_PLUS)])

    def test_sample_steps_out_of_range(self):
        m = ramp_model(n=5)
        a, b = start(4)
        with pytest.raises(ValueError):
            run_qj(m, a, b, qrng.derive(1, np.arange(4)), sample_steps=[9])
