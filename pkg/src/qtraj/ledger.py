"""Thermodynamic increments, entropy production and fluctuation-theorem estimators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import QubitState, expectation, require_hermitian, von_neumann_entropy  # noqa: F401
from .kraus import JUMP, KrausSet

EMISSION, ABSORPTION, NO_JUMP_LABEL = 1, 2, 0


@dataclass(slots=True)
class EnergyLedger:
    """Cumulative energy exchanges along one trajectory."""

    U: list[float] = field(default_factory=list)
    W: list[float] = field(default_factory=list)
    Q_cl: list[float] = field(default_factory=list)
    Q_q: list[float] = field(default_factory=list)
    Q_L: list[float] = field(default_factory=list)

    @classmethod
    def start(cls, U0: float) -> EnergyLedger:
        return cls([U0], [0.0], [0.0], [0.0], [0.0])

    def add(self, U: float, dW: float, dQ_cl: float, dQ_q: float, dQ_L: float = 0.0,
            tol: float = 1e-9) -> None:
        dU = U - self.U[-1]
        resid = dU - dW - dQ_cl - dQ_q - dQ_L
        scale = max(1.0, abs(dU), abs(dW), abs(dQ_cl), abs(dQ_q), abs(dQ_L))
        if abs(resid) > tol * scale:
            raise ValueError(f"first law violated by {resid:.3e} on step {len(self.U) - 1}")
        self.U.append(U)
        self.W.append(self.W[-1] + dW)
        self.Q_cl.append(self.Q_cl[-1] + dQ_cl)
        self.Q_q.append(self.Q_q[-1] + dQ_q)
        self.Q_L.append(self.Q_L[-1] + dQ_L)

    def closure_residual(self) -> float:
        dU = self.U[-1] - self.U[0]
        return dU - self.W[-1] - self.Q_cl[-1] - self.Q_q[-1] - self.Q_L[-1]


@dataclass(frozen=True, slots=True)
class FTEstimate:
    mean: float
    std_error: float
    n_samples: int

    def deviation(self, target: float = 1.0) -> float:
        """Distance to ``target`` in units of the standard error."""
        if self.std_error == 0.0:
            return 0.0 if self.mean == target else math.inf
        return abs(self.mean - target) / self.std_error

    def within(self, target: float, n_sigma: float = 4.0) -> bool:
        return abs(self.mean - target) <= n_sigma * self.std_error + 1e-15

    def __str__(self) -> str:
        return f"{self.mean:.6f} +/- {self.std_error:.6f} (n={self.n_samples})"


@dataclass(frozen=True, slots=True)
class EntropyRecord:
    delta_i_s: float
    boundary: float
    conditional: float

    def __post_init__(self) -> None:
        if math.isfinite(self.delta_i_s) and abs(self.delta_i_s - self.boundary - self.conditional) > 1e-12 * max(1.0, abs(self.delta_i_s)):
            raise ValueError("delta_i_s must equal boundary + conditional")


def work_increment(state: QubitState, dH_dt, dt: float) -> float:
    """dt <psi|dH/dt|psi>, with dH/dt taken in the lab frame."""
    return float(dt * expectation(require_hermitian(dH_dt, "dH/dt"), state).real)


def projective_measure_thermo(
    state: QubitState, basis: Sequence[QubitState], H, rng: np.random.Generator
) -> tuple[int, QubitState, float]:
    """Projective measurement in ``basis``; returns (outcome, post-state, quantum heat)."""
    h = require_hermitian(H, "H")
    vecs = np.array([m.vector for m in basis])
    if vecs.shape != (2, 2) or np.max(np.abs(vecs.conj() @ vecs.T - np.eye(2))) > 1e-10:
        raise ValueError("measurement basis must be orthonormal")
    probs = np.abs(vecs.conj() @ state.vector) ** 2
    k = int(rng.random() >= probs[0] / probs.sum())
    post = basis[k]
    dq = float(expectation(h, post).real - expectation(h, state).real)
    return k, post, dq


def measurement_heat_distribution(state: QubitState, basis: Sequence[QubitState], H):
    """Exact (probabilities, quantum heats) of a projective measurement."""
    h = require_hermitian(H, "H")
    u0 = expectation(h, state).real
    probs = np.array([abs(np.vdot(m.vector, state.vector)) ** 2 for m in basis])
    heats = np.array([expectation(h, m).real - u0 for m in basis])
    return probs, heats


def classical_heat_increment(outcome: int, omega_q: float) -> float:
    """-omega_q for emission, +omega_q for absorption, 0 without a jump."""
    table = {NO_JUMP_LABEL: 0.0, EMISSION: -omega_q, ABSORPTION: omega_q}
    if outcome not in table:
        raise ValueError(f"unknown thermal outcome label {outcome!r}")
    return table[outcome]


def quantum_heat_increment_qj(state: QubitState, outcome: int, kraus: KrausSet, H) -> float:
    """Closed-form quantum heat of a thermal quantum-jump outcome.

    Jumps erase the coherences like a projective sigma_z readout; the no-jump
    outcome is a weak sigma_z measurement. ``H`` must be diagonal.
    """
    h = require_hermitian(H, "H")
    if abs(h[0, 1]) > 1e-12:
        raise ValueError("closed form needs a Hamiltonian diagonal in {|e>, |g>}")
    omega_q = float((h[0, 0] - h[1, 1]).real)
    if outcome == EMISSION:
        return omega_q * state.p_g
    if outcome == ABSORPTION:
        return -omega_q * state.p_e
    if outcome != NO_JUMP_LABEL:
        raise ValueError(f"unknown thermal outcome label {outcome!r}")
    v = state.vector
    out = 0.0
    for lab, m, kind in kraus.operators:
        if kind != JUMP:
            continue
        mm = m.conj().T @ m
        p = float(np.vdot(v, mm @ v).real)
        x = mm - p * np.eye(2)
        out -= 0.5 * float(np.vdot(v, (x @ h + h @ x) @ v).real)
    return out


def entropy_production_tpmp(p_i: float, p_f: float, Q_cl: float, T: float) -> EntropyRecord:
    """ln(p_i / p_f) - Q_cl / T.

    A vanishing p_f marks a trajectory without time-reversed counterpart; its
    entropy production is +inf and e^{-Delta_i s} contributes zero.
    """
    if T <= 0:
        raise ValueError("temperature must be positive")
    if not (0 < p_i <= 1) or not (0 <= p_f <= 1):
        raise ValueError("probabilities must lie in (0, 1]")
    boundary = math.inf if p_f == 0 else math.log(p_i / p_f)
    cond = -Q_cl / T
    return EntropyRecord(boundary + cond, boundary, cond)


def boundary_entropy(p_i, p_f) -> np.ndarray:
    """Vectorized ln(p_i / p_f) with +inf where p_f = 0."""
    p_i = np.asarray(p_i, dtype=float)
    p_f = np.asarray(p_f, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(p_i) - np.log(p_f)


def _estimate(values: np.ndarray) -> FTEstimate:
    v = np.asarray(values, dtype=float)
    n = len(v)
    if n < 2:
        raise ValueError("an estimate needs at least two samples")
    mean = float(v.mean())
    # leave-one-out jackknife; for a plain mean it equals std / sqrt(n)
    loo = (v.sum() - v) / (n - 1)
    se = float(np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))
    return FTEstimate(mean, se, n)


def ift_estimator(entropies) -> FTEstimate:
    """Mean of e^{-Delta_i s} with a jackknife standard error.

    Accepts EntropyRecord objects or raw entropy values.
    """
    vals = np.array([e.delta_i_s if isinstance(e, EntropyRecord) else e for e in entropies], dtype=float)
    with np.errstate(over="ignore"):
        return _estimate(np.exp(-vals))


def jarzynski_estimator(works, delta_F: float, T: float) -> FTEstimate:
    """Mean of e^{-(W - Delta F)/T}."""
    w = np.asarray(works, dtype=float)
    return _estimate(np.exp(-(w - delta_F) / T))


def mean_estimate(values) -> FTEstimate:
    return _estimate(np.asarray(values, dtype=float))
