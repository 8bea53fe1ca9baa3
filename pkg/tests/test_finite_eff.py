from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtraj import finite_eff as fe
from qtraj.core import thermal_occupation
from qtraj.fme_obe import rabi_je_protocol
from qtraj.kraus import JUMP, thermal_kraus_set
from qtraj.protocols import stark_shift_protocol, tilted_moment


@lru_cache(maxsize=None)
def short_ramp(hw=1.0, r=9.0, steps=6):
    T = 1 / hw
    gm = thermal_occupation(1.0, T) + 1
    return stark_shift_protocol(r * gm, T, t_f=0.15 / gm, dt=0.15 / gm / steps)


@lru_cache(maxsize=None)
def ensemble(eta, n=20_000):
    return fe.simulate_imperfect(short_ramp(), eta, n, 1)


def posterior_weights(traj, spec, eta):
    fs = fe.enumerate_fictitious(traj, spec, eta)
    q = np.array([f.Q_cl_full for f in fs])
    p = np.array([f.cond_prob for f in fs])
    return q, p


class TestDetectionModel:
    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.05, 3.0))
    def test_instrument_is_trace_preserving(self, eta, pe, T):
        ks = thermal_kraus_set(1.0, thermal_occupation(1.0, T), np.diag([1.0, 0.0]), 0.005)
        rho = np.diag([pe, 1 - pe]).astype(complex)
        total = np.trace(fe.e0_eta(rho, eta, ks)).real
        for _, m, kind in ks.operators:
            if kind == JUMP:
                total += eta * np.trace(m @ rho @ m.conj().T).real
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_conditional_step_returns_a_state(self):
        ks = thermal_kraus_set(1.0, 0.5, np.diag([1.0, 0.0]), 0.02)
        rng = np.random.default_rng(1)
        rho = np.diag([0.3, 0.7]).astype(complex)
        for _ in range(50):
            rho, lab = fe.imperfect_qj_step(rho, 0.5, ks, rng)
            assert np.trace(rho).real == pytest.approx(1.0)
            assert lab in (0, 1, 2)

    def test_rejects_bad_efficiency(self):
        with pytest.raises(ValueError):
            fe.simulate_imperfect(short_ramp(), 1.5, 10, 1)

    def test_rejects_coherent_drive(self):
        with pytest.raises(ValueError):
            fe.chain_tables(rabi_je_protocol(1.0, gamma_minus=1.0, n_rabi=0.05, dt=0.05).model)

    def test_full_efficiency_sees_every_jump(self):
        ens = ensemble(1.0)
        assert np.array_equal(ens.Q_cl_eta, ens.Q_cl_true)
        assert np.all(fe.sigma_exact(ens, short_ramp()) == pytest.approx(0.0, abs=1e-12))

    def test_thinning_rate(self):
        ens, full = ensemble(0.3), ensemble(1.0)
        n_full = np.count_nonzero(full.obs)
        n_det = np.count_nonzero(ens.obs)
        se = math.sqrt(n_full * 0.3 * 0.7)
        assert abs(n_det - 0.3 * n_full) < 4 * se

    def test_filter_is_certain_at_full_efficiency(self):
        tab = fe.chain_tables(short_ramp().model)
        tr = ensemble(1.0).trajectory(0)
        pe = fe.filter_populations(tab, tr.record, tr.init, 1.0)
        assert np.all((pe == 0) | (pe == 1))


class TestJarzynskiAtFiniteEfficiency:
    def test_exact_uncorrected_reduces_at_full_efficiency(self):
        spec = short_ramp()
        assert fe.exact_uncorrected_je(spec, 1.0) == pytest.approx(tilted_moment(spec), abs=1e-12)

    @given(st.floats(0.0, 0.9))
    def test_missed_emissions_bias_upwards(self, eta):
        assert fe.exact_uncorrected_je(short_ramp(), eta) > 1.0

    @pytest.mark.parametrize("eta", [1.0, 0.3])
    def test_uncorrected_mc_matches_exact_mean(self, eta):
        spec, ens = short_ramp(), ensemble(eta)
        est = fe.uncorrected_je(ens, spec)
        assert est.within(fe.exact_uncorrected_je(spec, eta))

    def test_corrected_estimator_restores_unity(self):
        spec, ens = short_ramp(), ensemble(0.3)
        assert fe.corrected_je(ens, spec, fe.sigma_exact(ens, spec)).within(1.0)

    def test_corrected_equals_uncorrected_at_full_efficiency(self):
        spec, ens = short_ramp(), ensemble(1.0)
        a = fe.uncorrected_je(ens, spec)
        b = fe.corrected_je(ens, spec, fe.sigma_exact(ens, spec))
        assert a.mean == pytest.approx(b.mean, rel=1e-12)


class TestFictitiousTrajectories:
    def pick(self, n=8):
        ens = ensemble(0.3)
        idx = np.nonzero(ens.Q_cl_true != ens.Q_cl_eta)[0][:n]
        return ens, [ens.trajectory(int(i)) for i in idx]

    def test_enumeration_normalized_and_consistent(self):
        spec = short_ramp()
        ens, trajs = self.pick()
        for tr in trajs:
            fs = fe.enumerate_fictitious(tr, spec, 0.3)
            assert sum(f.cond_prob for f in fs) == pytest.approx(1.0)
            for f in fs:
                det = tr.record != 0
                assert np.array_equal(f.refined_labels[det], tr.record[det])

    def test_enumeration_matches_transfer_matrix(self):
        spec = short_ramp()
        ens, _ = self.pick()
        sig = fe.sigma_exact(ens, spec)
        idx = np.nonzero(ens.Q_cl_true != ens.Q_cl_eta)[0][:8]
        for i in idx:
            tr = ens.trajectory(int(i))
            q, p = posterior_weights(tr, spec, 0.3)
            ref = -math.log(np.sum(p * np.exp((q - tr.Q_cl_eta) / spec.temperature)))
            assert sig[i] == pytest.approx(ref, abs=1e-12)

    def test_posterior_sampling_matches_enumeration(self):
        spec = short_ramp()
        _, trajs = self.pick(3)
        for tr in trajs:
            samples = fe.sample_fictitious(tr, spec, 0.3, 4000, seed=1)
            assert all(f.cond_prob > 0 for f in samples)
            q, p = posterior_weights(tr, spec, 0.3)
            x = np.exp((np.array([f.Q_cl_full for f in samples]) - tr.Q_cl_eta) / spec.temperature)
            target = float(np.sum(p * np.exp((q - tr.Q_cl_eta) / spec.temperature)))
            assert abs(x.mean() - target) <= 4 * x.std() / math.sqrt(len(x)) + 1e-12

    def test_sampled_sigma_converges(self):
        spec, ens = short_ramp(), ensemble(0.3, 500)
        a = fe.sigma_sampled(ens, spec, 4000)
        b = fe.sigma_exact(ens, spec)
        assert np.max(np.abs(a - b)) < 0.1
        assert abs(np.mean(a - b)) < 0.01

    def test_sampled_sigma_is_batch_independent(self):
        spec, ens = short_ramp(), ensemble(0.3, 2000)
        a = fe.sigma_sampled(ens, spec, 50)
        sub = fe.ImperfectEnsemble(ens.eta, ens.obs[1500:], ens.init[1500:], ens.final[1500:], ens.dU[1500:],
                                   ens.Q_cl_eta[1500:], ens.Q_cl_true[1500:], ens.keys[1500:])
        assert np.array_equal(fe.sigma_sampled(sub, spec, 50), a[1500:])

    def test_enumeration_size_guard(self):
        spec = short_ramp(steps=12)
        tr = fe.simulate_imperfect(spec, 0.3, 1, 1).trajectory(0)
        with pytest.raises(ValueError):
            fe.enumerate_fictitious(tr, spec, 0.3, max_paths=100)
