from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qtraj.core import bloch_state, thermal_occupation
from qtraj.kraus import thermal_kraus_set
from qtraj.ledger import (
    ABSORPTION, EMISSION, NO_JUMP_LABEL, EnergyLedger, EntropyRecord, FTEstimate, boundary_entropy,
    classical_heat_increment, entropy_production_tpmp, ift_estimator, jarzynski_estimator, mean_estimate,
    quantum_heat_increment_qj,
)

finite = st.floats(-10, 10)


class TestEnergyLedger:
    @given(st.lists(st.tuples(finite, finite, finite), min_size=1, max_size=20))
    def test_accumulates_and_closes(self, steps):
        led = EnergyLedger.start(0.5)
        U = 0.5
        for dW, dq, dqq in steps:
            U += dW + dq + dqq
            led.add(U, dW, dq, dqq)
        assert abs(led.closure_residual()) < 1e-9 * max(1.0, sum(abs(a) + abs(b) + abs(c) for a, b, c in steps))
        assert led.W[-1] == pytest.approx(sum(s[0] for s in steps))

    def test_rejects_violation(self):
        led = EnergyLedger.start(0.0)
        with pytest.raises(ValueError, match="first law"):
            led.add(1.0, 0.5, 0.0, 0.0)


class TestEntropy:
    @given(st.floats(1e-6, 1), st.floats(1e-6, 1), finite, st.floats(0.1, 10))
    def test_decomposition(self, pi, pf, q, T):
        r = entropy_production_tpmp(pi, pf, q, T)
        assert r.delta_i_s == pytest.approx(math.log(pi / pf) - q / T)

    def test_missing_reverse_path(self):
        r = entropy_production_tpmp(0.5, 0.0, 1.0, 1.0)
        assert r.delta_i_s == math.inf
        assert ift_estimator([r, 0.0]).mean == pytest.approx(0.5)

    def test_inconsistent_record(self):
        with pytest.raises(ValueError):
            EntropyRecord(1.0, 0.2, 0.3)

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            entropy_production_tpmp(0.5, 0.5, 0.0, 0.0)
        with pytest.raises(ValueError):
            entropy_production_tpmp(0.0, 0.5, 0.0, 1.0)

    def test_boundary_vectorized(self):
        b = boundary_entropy([0.5, 0.2], [0.25, 0.0])
        assert b[0] == pytest.approx(math.log(2))
        assert b[1] == math.inf


class TestHeat:
    def test_classical_table(self):
        assert classical_heat_increment(EMISSION, 2.0) == -2.0
        assert classical_heat_increment(ABSORPTION, 2.0) == 2.0
        assert classical_heat_increment(NO_JUMP_LABEL, 2.0) == 0.0
        with pytest.raises(ValueError):
            classical_heat_increment(3, 1.0)

    @given(st.floats(0.01, math.pi - 0.01), st.floats(0, 2 * math.pi))
    def test_jump_heat_completes_the_projection(self, theta, phi):
        H = np.diag([1.0, 0.0])
        psi = bloch_state(theta, phi)
        ks = thermal_kraus_set(1.0, thermal_occupation(1.0, 1.0), H, 0.01)
        assert quantum_heat_increment_qj(psi, EMISSION, ks, H) == pytest.approx(psi.p_g)
        assert quantum_heat_increment_qj(psi, ABSORPTION, ks, H) == pytest.approx(-psi.p_e)

    @given(st.floats(0.01, math.pi - 0.01))
    def test_no_jump_heat_is_first_order(self, theta):
        """Weak sigma_z readout: no-jump heat is O(dt) and vanishes for energy eigenstates."""
        H = np.diag([1.0, 0.0])
        psi = bloch_state(theta, 0.0)
        n = thermal_occupation(1.0, 1.0)
        q1 = quantum_heat_increment_qj(psi, NO_JUMP_LABEL, thermal_kraus_set(1.0, n, H, 1e-3), H)
        q2 = quantum_heat_increment_qj(psi, NO_JUMP_LABEL, thermal_kraus_set(1.0, n, H, 2e-3), H)
        assert q2 == pytest.approx(2 * q1, rel=1e-2)
        ks = thermal_kraus_set(1.0, n, H, 1e-3)
        assert quantum_heat_increment_qj(bloch_state(0.0, 0.0), NO_JUMP_LABEL, ks, H) == pytest.approx(0, abs=1e-15)

    def test_needs_diagonal_hamiltonian(self):
        H = np.array([[1.0, 0.1], [0.1, 0.0]])
        ks = thermal_kraus_set(1.0, 0.1, np.diag([1.0, 0.0]), 0.01)
        with pytest.raises(ValueError):
            quantum_heat_increment_qj(bloch_state(1.0, 0.0), EMISSION, ks, H)


class TestEstimators:
    @given(arrays(np.float64, st.integers(2, 200), elements=st.floats(-5, 5)))
    def test_jackknife_equals_plain_standard_error(self, x):
        est = mean_estimate(x)
        assert est.mean == pytest.approx(x.mean())
        assert est.std_error == pytest.approx(x.std(ddof=1) / math.sqrt(len(x)), rel=1e-9, abs=1e-12)

    @given(finite, finite, st.floats(0.1, 10))
    def test_jarzynski_constant_work(self, w, dF, T):
        est = jarzynski_estimator([w, w, w], dF, T)
        assert est.mean == pytest.approx(math.exp(-(w - dF) / T))
        assert est.std_error == pytest.approx(0.0, abs=1e-12 * est.mean)

    def test_needs_two_samples(self):
        with pytest.raises(ValueError):
            mean_estimate([1.0])

    def test_deviation_and_within(self):
        e = FTEstimate(1.1, 0.05, 100)
        assert e.deviation(1.0) == pytest.approx(2.0)
        assert e.within(1.0)
        assert not e.within(1.0, n_sigma=1.0)
        assert FTEstimate(1.0, 0.0, 2).deviation(1.0) == 0.0
        assert FTEstimate(1.1, 0.0, 2).deviation(1.0) == math.inf
