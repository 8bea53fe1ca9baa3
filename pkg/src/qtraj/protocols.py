"""Protocol definitions, ensemble runner and the Chapter 1-2 experiments."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import rng as qrng
from .core import (
    EXCITED,
    GROUND,
    PROJ_E,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Z,
    QubitState,
    bloch_state,
    free_energy,
    orthogonal_state,
    shannon_entropy,
    thermal_excited_population,
    thermal_occupation,
)
from .engine import (
    EnsembleResult,
    JumpChannel,
    PathEnsemble,
    QJModel,
    _expect,
    build_model,
    enumerate_paths,
    run_qj,
    run_renewal,
)
from .ledger import EnergyLedger, FTEstimate, ift_estimator, mean_estimate

PURPOSE_INIT = 3
PURPOSE_FINAL = 4
EG_BASIS = np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex)


@dataclass(slots=True)
class ProtocolSpec:
    """Initial sampler, tabulated unraveling and terminal measurement of a protocol.

    ``init_states`` (rows) are drawn with ``init_probs``. If ``final_basis``
    (rows) is set, the final energy observable is measured projectively in it
    and the reversed process starts from ``final_ref_probs`` over that basis.
    """

    name: str
    model: QJModel
    init_states: np.ndarray
    init_probs: np.ndarray
    temperature: float = 0.0
    final_basis: np.ndarray | None = None
    final_ref_probs: np.ndarray | None = None
    delta_F: float = 0.0
    engine: str = "step"
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.init_states = np.atleast_2d(np.asarray(self.init_states, dtype=complex))
        self.init_probs = np.asarray(self.init_probs, dtype=float)
        if self.model.n_steps * self.model.dt <= 0:
            raise ValueError("protocol duration must be positive")
        if abs(self.init_probs.sum() - 1.0) > 1e-12:
            raise ValueError("initial probabilities must sum to one")
        if self.engine not in ("step", "renewal"):
            raise ValueError(f"unknown engine {self.engine!r}")

    @property
    def duration(self) -> float:
        return self.model.n_steps * self.model.dt

    @property
    def final_energy_op(self) -> np.ndarray:
        if self.model.final_energy is not None:
            return self.model.final_energy
        return self.model.energy(self.model.n_steps)


@dataclass(slots=True)
class TrajectoryEnsemble:
    """Per-trajectory thermodynamics of a protocol run."""

    protocol: str
    seed: int
    init_index: np.ndarray
    final_index: np.ndarray | None
    W: np.ndarray
    Q_cl: np.ndarray
    Q_q: np.ndarray
    Q_L: np.ndarray
    U_i: np.ndarray
    U_f: np.ndarray
    log_prob: np.ndarray
    n_jumps: np.ndarray
    boundary: np.ndarray | None = None
    conditional: np.ndarray | None = None
    raw: EnsembleResult | None = None

    @property
    def n_traj(self) -> int:
        return len(self.W)

    @property
    def entropy(self) -> np.ndarray | None:
        if self.boundary is None:
            return None
        return self.boundary + self.conditional

    def ift(self) -> FTEstimate:
        return ift_estimator(self.entropy)

    def first_law_residual(self) -> float:
        r = self.U_f - self.U_i - self.W - self.Q_cl - self.Q_q - self.Q_L
        return float(np.max(np.abs(r))) if len(r) else 0.0

    def summary(self) -> dict:
        out = {
            "protocol": self.protocol,
            "n_traj": int(self.n_traj),
            "seed": int(self.seed),
            "ift_mean": float("nan"),
            "ift_stderr": float("nan"),
            "mean_entropy": float("nan"),
            "mean_W": float(np.mean(self.W)),
            "mean_Qcl": float(np.mean(self.Q_cl)),
            "mean_Qq": float(np.mean(self.Q_q)),
        }
        if self.boundary is not None and self.n_traj >= 2:
            est = self.ift()
            out["ift_mean"] = est.mean
            out["ift_stderr"] = est.std_error
            out["mean_entropy"] = float(np.mean(self.entropy))
        return out


def _sample_index(u: np.ndarray, probs: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf = cdf / cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(probs) - 1)


def run_protocol(spec: ProtocolSpec, n_traj: int, seed: int, threads: int = 1,
                 sample_steps: Sequence[int] = (), record: bool = False) -> TrajectoryEnsemble:
    """Run ``n_traj`` trajectories; trajectory i uses the stream derive(seed, i)."""
    keys = qrng.derive(seed, np.arange(n_traj))
    init_idx = _sample_index(qrng.uniforms(keys, 0, PURPOSE_INIT), spec.init_probs)
    a0 = spec.init_states[init_idx, 0]
    b0 = spec.init_states[init_idx, 1]
    if spec.engine == "renewal" and not record and not len(sample_steps):
        res = run_renewal(spec.model, spec.init_states, init_idx, keys)
    else:
        res = run_qj(spec.model, a0, b0, keys, sample_steps=sample_steps, record=record, threads=threads)
    return _finish(spec, seed, keys, init_idx, res)


def _finish(spec: ProtocolSpec, seed: int, keys, init_idx, res: EnsembleResult) -> TrajectoryEnsemble:
    W = res.W.copy()
    Qq = res.Q_q.copy()
    U_f = res.U_f.copy()
    logp = res.log_prob.copy()
    a, b = res.final_a, res.final_b
    ef = spec.final_energy_op
    if spec.model.final_energy is not None:
        u_switch = _expect(ef, a, b)
        W += u_switch - U_f
        U_f = u_switch
    final_idx = None
    boundary = conditional = None
    if spec.final_basis is not None:
        fb = spec.final_basis
        amp = fb.conj() @ np.vstack([a, b])  # (2, n)
        probs = np.abs(amp) ** 2
        u = qrng.uniforms(keys, 0, PURPOSE_FINAL) * probs.sum(axis=0)
        final_idx = (probs[0] <= u).astype(np.int64)
        e_out = np.array([np.vdot(v, ef @ v).real for v in fb])[final_idx]
        Qq += e_out - U_f
        U_f = e_out
        with np.errstate(divide="ignore"):
            logp += np.log(probs[final_idx, np.arange(len(a))] / probs.sum(axis=0))
        if spec.final_ref_probs is not None:
            with np.errstate(divide="ignore"):
                boundary = np.log(spec.init_probs[init_idx]) - np.log(spec.final_ref_probs[final_idx])
            if spec.temperature > 0:
                conditional = -res.Q_cl / spec.temperature
            else:
                conditional = np.where(res.Q_cl != 0, np.inf, 0.0)
    return TrajectoryEnsemble(
        protocol=spec.name, seed=seed, init_index=init_idx, final_index=final_idx,
        W=W, Q_cl=res.Q_cl, Q_q=Qq, Q_L=res.Q_L, U_i=res.U_i, U_f=U_f, log_prob=logp,
        n_jumps=res.n_jumps, boundary=boundary, conditional=conditional, raw=res,
    )


@dataclass(slots=True)
class EnumeratedProtocol:
    """Exact path distribution of a protocol (initial label, outcomes, final label)."""

    prob: np.ndarray
    W: np.ndarray
    Q_cl: np.ndarray
    Q_q: np.ndarray
    Q_L: np.ndarray
    entropy: np.ndarray | None
    paths: PathEnsemble

    def mean(self, x: np.ndarray) -> float:
        m = self.prob > 0
        return float(np.sum(self.prob[m] * x[m]))

    def ift(self) -> float:
        with np.errstate(over="ignore"):
            return self.mean(np.exp(-self.entropy))


def enumerate_protocol(spec: ProtocolSpec) -> EnumeratedProtocol:
    pe = enumerate_paths(spec.model, spec.init_states, spec.init_probs)
    W = pe.W.copy()
    U_f = pe.U_f.copy()
    ef = spec.final_energy_op
    if spec.model.final_energy is not None:
        us = _expect(ef, pe.final_a, pe.final_b)
        W += us - U_f
        U_f = us
    if spec.final_basis is None:
        return EnumeratedProtocol(pe.prob, W, pe.Q_cl, pe.Q_q, pe.Q_L, None, pe)
    fb = spec.final_basis
    amp = fb.conj() @ np.vstack([pe.final_a, pe.final_b])
    probs = np.abs(amp) ** 2
    probs = probs / probs.sum(axis=0)
    e_out = np.array([np.vdot(v, ef @ v).real for v in fb])
    prob = np.concatenate([pe.prob * probs[0], pe.prob * probs[1]])
    rep = lambda x: np.concatenate([x, x])
    f_idx = np.repeat([0, 1], len(pe.prob))
    Qq = rep(pe.Q_q) + e_out[f_idx] - rep(U_f)
    ent = None
    if spec.final_ref_probs is not None and spec.temperature > 0:
        with np.errstate(divide="ignore"):
            ent = (
                np.log(spec.init_probs[rep(pe.init_index)])
                - np.log(spec.final_ref_probs[f_idx])
                - rep(pe.Q_cl) / spec.temperature
            )
    return EnumeratedProtocol(prob, rep(W), rep(pe.Q_cl), Qq, rep(pe.Q_L), ent, pe)


def _superoperator(ops: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Row-major vec(rho) -> vec(sum_k w_k K_k rho K_k^dag)."""
    return sum(w * np.kron(k, k.conj()) for k, w in zip(ops, weights))


def tilted_moment(spec: ProtocolSpec, lam: float = 1.0) -> float:
    """Exact <e^{-lam Delta_i s}> of a two-point-measurement protocol at T > 0.

    Each Kraus branch is weighted by e^{lam Q_cl / T}, so the tilted channel
    carries the classical-heat factor; the boundary factor (p_f / p_i)^lam is
    applied at the end. lam = 1 gives the integral fluctuation theorem, lam = 2
    the second moment of the estimator.
    """
    if spec.temperature <= 0 or spec.final_basis is None or spec.final_ref_probs is None:
        raise ValueError("tilted moments need a thermal two-point-measurement protocol")
    m = spec.model
    beta = 1.0 / spec.temperature
    vs = []
    for psi in spec.init_states:
        vs.append(np.outer(psi, psi.conj()).reshape(4))
    v = np.array(vs).T  # (4, m)
    if m.static:
        sup = _superoperator(m.channel(0), np.exp(lam * beta * m.heats(0)[0]))
        v = np.linalg.matrix_power(sup, m.n_steps) @ v
    else:
        for n in range(m.n_steps):
            v = _superoperator(m.channel(n), np.exp(lam * beta * m.heats(n)[0])) @ v
    total = 0.0
    for i, p_i in enumerate(spec.init_probs):
        if p_i == 0:
            continue
        rho = v[:, i].reshape(2, 2)
        for f, vec in enumerate(spec.final_basis):
            pf = float(np.vdot(vec, rho @ vec).real)
            if pf != 0.0:
                total += p_i * pf * (spec.final_ref_probs[f] / p_i) ** lam
    return total


def ift_pass_probability(spec: ProtocolSpec, n_traj: int) -> dict:
    """Exact mean and standard error of the n-sample IFT estimator."""
    m1 = tilted_moment(spec, 1.0)
    m2 = tilted_moment(spec, 2.0)
    sd = math.sqrt(max(m2 - m1 * m1, 0.0))
    return {"ift": m1, "second_moment": m2, "sd": sd, "stderr": sd / math.sqrt(n_traj)}


# ---------------------------------------------------------------------------
# Trajectory records
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class MeasurementRecord:
    outcomes: np.ndarray
    dt: float
    seed: int

    def __len__(self) -> int:
        return len(self.outcomes)


@dataclass(slots=True)
class TrajectoryRecord:
    states: np.ndarray  # (N + 1, 2)
    record: MeasurementRecord
    ledger: EnergyLedger
    log_prob: float
    initial_label: int
    final_label: int | None

    def state(self, n: int) -> QubitState:
        return QubitState.from_vector(self.states[n])


def run_ensemble(protocol: ProtocolSpec, n_traj: int, base_seed: int) -> list[TrajectoryRecord]:
    """Full per-step records (states, outcomes, ledgers) for small ensembles."""
    if n_traj == 0:
        return []
    keys = qrng.derive(base_seed, np.arange(n_traj))
    init_idx = _sample_index(qrng.uniforms(keys, 0, PURPOSE_INIT), protocol.init_probs)
    a0 = protocol.init_states[init_idx, 0]
    b0 = protocol.init_states[init_idx, 1]
    res = run_qj(protocol.model, a0, b0, keys, record=True)
    fin = _finish(protocol, base_seed, keys, init_idx, res)
    out = []
    m = protocol.model
    for i in range(n_traj):
        led = EnergyLedger.start(float(res.U_i[i]))
        for n in range(m.n_steps):
            s = res.states[i, n + 1]
            u = float(_expect(m.energy(n + 1), s[:1], s[1:])[0])
            inc = res.increments
            led.add(u, inc["dW"][i, n], inc["dQ_cl"][i, n], inc["dQ_q"][i, n], inc["dQ_L"][i, n])
        rec = MeasurementRecord(res.outcomes[i].astype(np.int64), m.dt, int(base_seed))
        out.append(
            TrajectoryRecord(
                states=res.states[i], record=rec, ledger=led, log_prob=float(fin.log_prob[i]),
                initial_label=int(init_idx[i]),
                final_label=None if fin.final_index is None else int(fin.final_index[i]),
            )
        )
    return out


def trajectory_rows(recs: list[TrajectoryRecord]) -> list[tuple]:
    """Rows (traj_id, step, t, outcome, amplitudes, dW, dQ_cl, dQ_q, dQ_L) for CSV dumps."""
    rows = []
    for tid, r in enumerate(recs):
        led = r.ledger
        for n in range(len(r.states)):
            a, b = r.states[n]
            if n == 0:
                inc = (0.0, 0.0, 0.0, 0.0)
                outc = -1
            else:
                inc = (
                    led.W[n] - led.W[n - 1], led.Q_cl[n] - led.Q_cl[n - 1],
                    led.Q_q[n] - led.Q_q[n - 1], led.Q_L[n] - led.Q_L[n - 1],
                )
                outc = int(r.record.outcomes[n - 1])
            rows.append((tid, n, n * r.record.dt, outc, a.real, a.imag, b.real, b.imag) + inc)
    return rows


# ---------------------------------------------------------------------------
# Thermal quantum-jump protocols
# ---------------------------------------------------------------------------


def thermal_channels(gamma_q: float, omega_q: float, T: float) -> list[JumpChannel]:
    n = thermal_occupation(omega_q, T)
    return [
        JumpChannel(1, gamma_q * (n + 1), SIGMA_MINUS, -omega_q),
        JumpChannel(2, gamma_q * n, SIGMA_PLUS, omega_q),
    ]


def default_dt(gamma_q: float, n_q: float, factor: float = 0.01) -> float:
    return factor / (gamma_q * (2 * n_q + 1))


def thermal_tpm_spec(name: str, model: QJModel, omega_i: float, omega_f: float, T: float,
                     engine: str = "step", params: dict | None = None) -> ProtocolSpec:
    """Thermal start at omega_i, final sigma_z readout, reversed start thermal at omega_f."""
    pe_i = thermal_excited_population(omega_i, T)
    pe_f = thermal_excited_population(omega_f, T)
    return ProtocolSpec(
        name=name, model=model, init_states=EG_BASIS, init_probs=np.array([pe_i, 1 - pe_i]),
        temperature=T, final_basis=EG_BASIS, final_ref_probs=np.array([pe_f, 1 - pe_f]),
        delta_F=free_energy(omega_f, T) - free_energy(omega_i, T), engine=engine, params=params or {},
    )


def stark_shift_protocol(mu: float, T: float, t_f: float | None = None, gamma_q: float = 1.0,
                         omega_0: float = 1.0, dt: float | None = None) -> ProtocolSpec:
    """Linear ramp omega_q(t) = omega_0 (1 + mu t) with the qubit thermalizing throughout.

    ``mu`` is a rate; the default duration is 10 / Gamma_minus at the initial frequency.
    """
    n0 = thermal_occupation(omega_0, T)
    gamma_minus = gamma_q * (n0 + 1)
    if t_f is None:
        t_f = 10.0 / gamma_minus
    if dt is None:
        dt = default_dt(gamma_q, n0)
    n_steps = max(1, int(round(t_f / dt)))
    dt = t_f / n_steps
    omega = lambda t: omega_0 * (1.0 + mu * t)
    model = build_model(
        dt, n_steps,
        energy=lambda t: omega(t) * PROJ_E,
        hamiltonian=lambda t: omega(t) * PROJ_E,
        channels=lambda t: thermal_channels(gamma_q, omega(t), T),
        name="stark",
    )
    return thermal_tpm_spec("stark-je", model, omega_0, omega(t_f), T, params=dict(
        mu=mu, T=T, t_f=t_f, gamma_q=gamma_q, omega_0=omega_0))


def stark_shift_drive(t: float, omega_0: float, mu: float) -> np.ndarray:
    """H_d(t) = omega_0 mu t Pi_e."""
    return omega_0 * mu * t * PROJ_E


def zero_temperature_decay(gamma_q: float = 1.0, omega_0: float = 1.0, t_f: float = 3.0,
                           initial: QubitState = EXCITED, dt: float | None = None,
                           first_order: bool = False) -> ProtocolSpec:
    dt = dt or 0.01 / gamma_q
    n_steps = max(1, int(round(t_f / dt)))
    model = build_model(
        t_f / n_steps, n_steps, omega_0 * PROJ_E, omega_0 * PROJ_E,
        [JumpChannel(1, gamma_q, SIGMA_MINUS, -omega_0)], first_order=first_order, name="decay",
    )
    return ProtocolSpec("zero-t-decay", model, initial.vector[None], [1.0], engine="step",
                        params=dict(gamma_q=gamma_q, omega_0=omega_0, t_f=t_f))


def spontaneous_emission_protocol(gamma_q: float = 1.0, t_f: float = 10.0, omega_0: float = 1.0,
                                  dt: float | None = None) -> ProtocolSpec:
    """Start in |+> = (|e> + |g>)/sqrt(2) and emit into a zero-temperature bath."""
    spec = zero_temperature_decay(gamma_q, omega_0, t_f, bloch_state(math.pi / 2, 0.0), dt)
    spec.name = "spont-em"
    spec.engine = "renewal"
    return spec


@dataclass(slots=True)
class SpontaneousEmissionStats:
    jump_fraction: FTEstimate
    p_jump_exact: float
    Qq_no_jump: np.ndarray
    Qq_jump: np.ndarray
    Qcl_jump: np.ndarray
    boundary_mean: FTEstimate
    boundary_exact: float


def spontaneous_emission_stats(ens: TrajectoryEnsemble, gamma_q: float, t_f: float) -> SpontaneousEmissionStats:
    """Classify trajectories as jump / no-jump and score boundary entropy by class."""
    jumped = ens.n_jumps > 0
    p_j = 0.5 * (1 - math.exp(-gamma_q * t_f))
    # each trajectory's final state identifies its class, whose probability
    # is exactly p_j or 1 - p_j
    b = np.where(jumped, -math.log(p_j) if p_j > 0 else 0.0, -math.log(1 - p_j))
    return SpontaneousEmissionStats(
        jump_fraction=mean_estimate(jumped.astype(float)),
        p_jump_exact=p_j,
        Qq_no_jump=ens.Q_q[~jumped],
        Qq_jump=ens.Q_q[jumped],
        Qcl_jump=ens.Q_cl[jumped],
        boundary_mean=mean_estimate(b),
        boundary_exact=float(shannon_entropy(1 - p_j)),
    )


def spont_no_jump_quantum_heat(gamma_q: float, t_f: float, omega_0: float = 1.0) -> float:
    """Exact quantum heat of the no-jump trajectory up to t_f."""
    x = math.exp(-gamma_q * t_f)
    return omega_0 * (x / (1 + x) - 0.5)


# ---------------------------------------------------------------------------
# Projective readout and absolute irreversibility
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class ReadoutResult:
    ift: FTEstimate
    mean_entropy: FTEstimate
    quantum_heat: np.ndarray
    outcomes: np.ndarray


def readout_exact(theta: float) -> dict:
    """Exact two-outcome statistics of reading out |+_theta> in {|e>, |g>}.

    The reversed process starts from rho_f = diag(p_e, p_g) and measures in
    {|+_theta>, |-_theta>}; landing in |-_theta> has no forward counterpart.
    """
    p = np.array([math.cos(theta / 2) ** 2, math.sin(theta / 2) ** 2])
    # e^{-Delta s} = p_f / p_i with p_i = 1; paths with p = 0 never occur
    ift = float(np.sum(p * p))
    return {
        "probs": p,
        "ift": ift,
        "p_bar": 1.0 - ift,
        "p_bar_closed_form": math.sin(theta) ** 2 / 2,
        "mean_entropy": float(shannon_entropy(p[0])),
    }


def readout_protocol(theta: float, n_traj: int, seed: int, omega_0: float = 1.0) -> ReadoutResult:
    """Monte-Carlo readout of |+_theta> with entropy ln(p_i/p_f), p_i = 1."""
    keys = qrng.derive(seed, np.arange(n_traj))
    u = qrng.uniforms(keys, 0, PURPOSE_FINAL)
    p_e = math.cos(theta / 2) ** 2
    outcome = (u >= p_e).astype(np.int64)  # 0 -> |e>, 1 -> |g>
    p_f = np.where(outcome == 0, p_e, 1 - p_e)
    ds = -np.log(p_f)
    qq = np.where(outcome == 0, omega_0, 0.0) - omega_0 * p_e
    return ReadoutResult(ift_estimator(ds), mean_estimate(ds), qq, outcome)


# ---------------------------------------------------------------------------
# Measurement-powered engine
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class MPEParams:
    n_axis: tuple[float, float] = (math.pi / 2, 0.0)  # (theta_n, phi_n); x-axis by default
    rabi_angle: float = math.pi / 2
    omega_0: float = 1.0
    T_C: float = 0.1
    tau_m: float = 0.0
    tau_fb: float = 0.0
    g: float = 1.0

    def __post_init__(self) -> None:
        if not 0 < self.rabi_angle < math.pi:
            raise ValueError("Rabi angle must lie in (0, pi)")
        if self.tau_m < 0 or self.tau_fb < 0:
            raise ValueError("durations must be nonnegative")

    @property
    def n_vector(self) -> np.ndarray:
        tn, pn = self.n_axis
        return np.array([math.sin(tn) * math.cos(pn), math.sin(tn) * math.sin(pn), math.cos(tn)])


def carnot_like_efficiency(omega_0: float, T_C: float) -> float:
    """Efficiency of the thermally driven demon engine, 1 - 2 T_C ln2 / omega_0."""
    return 1.0 - 2.0 * T_C * math.log(2.0) / omega_0


def mpe_efficiency(theta: float, omega_0: float, T_C: float) -> float:
    """1 - (2 T_C / omega_0) H[cos^2(theta/2)] / sin(theta), entropy in nats (n = x)."""
    s = math.sin(theta)
    if abs(s) < 1e-15:
        raise ValueError("efficiency undefined for sin(theta) = 0")
    return 1.0 - (2.0 * T_C / omega_0) * float(shannon_entropy(math.cos(theta / 2) ** 2)) / s


def mpe_p_minus(theta: float, n_vec: np.ndarray) -> float:
    """Probability of the outcome that triggers feedback."""
    return math.sin(theta / 2) ** 2 * (1.0 - n_vec[1] ** 2)


def mpe_power(n_axis: tuple[float, float], theta: float, g: float, omega_0: float,
              tau_m: float = 0.0, tau_fb: float = 0.0) -> tuple[float, float]:
    """(ideal, finite-time) average extracted power."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    x, y, z = MPEParams(n_axis=n_axis).n_vector
    ideal = g * omega_0 / 2 * (math.sin(theta) / theta * x + (1 - math.cos(theta)) / theta * z * y**2)
    tau_w = theta / g
    real = ideal * tau_w / (tau_w + tau_m + mpe_p_minus(theta, np.array([x, y, z])) * tau_fb)
    return ideal, real


@dataclass(slots=True)
class MPECycles:
    W_ext: np.ndarray
    Q_q: np.ndarray
    W_fb: np.ndarray
    outcome_plus: np.ndarray
    memory_entropy: float
    erasure_work: float

    @property
    def net_work(self) -> np.ndarray:
        return self.W_ext - self.W_fb

    def efficiency_estimate(self, T_C: float) -> tuple[float, float]:
        """Efficiency 1 - T_C H_hat / <Q_q> from cycle statistics, with a delta-method error."""
        n = len(self.Q_q)
        q = self.Q_q.mean()
        p = self.outcome_plus.mean()
        H = float(shannon_entropy(p))
        eta = 1.0 - T_C * H / q
        dH = math.log((1 - p) / p) if 0 < p < 1 else 0.0
        var_H = dH**2 * p * (1 - p) / n
        var_q = self.Q_q.var(ddof=1) / n
        cov = dH * np.cov(self.outcome_plus.astype(float), self.Q_q)[0, 1] / n
        grad_h, grad_q = -T_C / q, T_C * H / q**2
        var = grad_h**2 * var_H + grad_q**2 * var_q + 2 * grad_h * grad_q * cov
        return eta, math.sqrt(max(var, 0.0))


def mpe_cycle_simulate(params: MPEParams, n_cycles: int, seed: int) -> MPECycles:
    """Engine cycles: Rabi rotation by theta about y (work), projective sigma_n readout
    (quantum heat), feedback rotation back to |+_n> on the '-' outcome, memory erasure."""
    w0 = params.omega_0
    th = params.rabi_angle
    x, y, z = params.n_vector
    # Bloch vector after the y rotation
    xr = x * math.cos(th) + z * math.sin(th)
    zr = z * math.cos(th) - x * math.sin(th)
    yr = y
    U_n = lambda s: w0 * (1 + s * z) / 2
    w_ext = U_n(1) - w0 * (1 + zr) / 2
    c_plus = xr * x + yr * y + zr * z
    p_plus = (1 + c_plus) / 2
    keys = qrng.derive(seed, np.arange(n_cycles))
    plus = qrng.uniforms(keys, 0, PURPOSE_FINAL) < p_plus
    u_after = w0 * (1 + zr) / 2
    q_q = np.where(plus, U_n(1), U_n(-1)) - u_after
    w_fb = np.where(plus, 0.0, U_n(1) - U_n(-1))
    H = float(shannon_entropy(p_plus))
    return MPECycles(
        W_ext=np.full(n_cycles, w_ext), Q_q=q_q, W_fb=w_fb, outcome_plus=plus,
        memory_entropy=H, erasure_work=params.T_C * H,
    )


def mpe_closed_forms(params: MPEParams) -> dict:
    """Cycle averages from the Bloch-vector algebra of one cycle."""
    w0 = params.omega_0
    th = params.rabi_angle
    x, y, z = params.n_vector
    w_ext = w0 / 2 * ((1 - math.cos(th)) * z + math.sin(th) * x)
    p_minus = mpe_p_minus(th, params.n_vector)
    mean_qq = w_ext + p_minus * (-w0 * z)
    net = w0 / 2 * (math.sin(th) * x + (1 - math.cos(th)) * z * y**2)
    H = float(shannon_entropy(1 - p_minus))
    ideal, real = mpe_power(params.n_axis, th, params.g, w0, params.tau_m, params.tau_fb)
    return {"W_ext": w_ext, "mean_Qq": mean_qq, "net_work": net, "p_minus": p_minus,
            "memory_entropy": H, "power": ideal, "power_real": real}


# ---------------------------------------------------------------------------
# Continuous measurement with feedback
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class FeedbackParams:
    target_theta: float = math.pi / 2
    gamma_meas: float = 0.1
    w_cutoff: float = math.inf
    duration: float = 200.0
    omega_0: float = 1.0
    dt: float | None = None

    def __post_init__(self) -> None:
        if not self.gamma_meas > 0:
            raise ValueError("gamma_meas must be positive")


@dataclass(slots=True)
class FeedbackResult:
    fidelity: float
    fidelity_stderr: float
    heat: np.ndarray  # quantum heat increments
    work: np.ndarray  # feedback work increments
    cum_heat: np.ndarray
    cum_work: np.ndarray
    final_theta: np.ndarray


def feedback_protocol(params: FeedbackParams, n_traj: int, seed: int) -> FeedbackResult:
    """Monitor sigma_z diffusively and rotate the state back to the target colatitude.

    In the frame rotating at omega_0 the free Hamiltonian vanishes and the
    measurement only moves the colatitude theta. Each step the feedback applies
    a y-rotation by -d(theta) unless its energy cost exceeds ``w_cutoff``.
    """
    dt = params.dt or 0.01 / params.gamma_meas
    if params.gamma_meas * dt > 0.05:
        raise ValueError("step too large: gamma_meas dt must not exceed 0.05")
    n_steps = int(round(params.duration / dt))
    G = params.gamma_meas
    w0 = params.omega_0
    keys = qrng.derive(seed, np.arange(n_traj))
    th0 = params.target_theta
    a = np.full(n_traj, math.cos(th0 / 2), dtype=float)
    b = np.full(n_traj, math.sin(th0 / 2), dtype=float)
    heat = np.zeros((n_traj, n_steps))
    work = np.zeros((n_traj, n_steps))
    sq = math.sqrt(G)
    for n in range(n_steps):
        dw = qrng.normals(keys, n, 5) * math.sqrt(dt)
        z = a * a - b * b
        dy = dw + 2 * sq * z * dt
        # M = 1 - (G/2) dt sigma_z^2 + sqrt(G) dy sigma_z acts diagonally
        na = a * (1 - 0.5 * G * dt + sq * dy)
        nb = b * (1 - 0.5 * G * dt - sq * dy)
        norm = np.sqrt(na * na + nb * nb)
        na /= norm
        nb /= norm
        dq = w0 * (na * na - a * a)
        # feedback rotation restoring the pre-measurement amplitudes
        dwfb = w0 * (a * a - na * na)
        ok = np.abs(dwfb) <= params.w_cutoff
        a = np.where(ok, a, na)
        b = np.where(ok, b, nb)
        heat[:, n] = dq
        work[:, n] = np.where(ok, dwfb, 0.0)
    theta_f = 2 * np.arctan2(b, a)
    fid = np.cos((theta_f - th0) / 2) ** 2
    est = mean_estimate(fid) if n_traj >= 2 else FTEstimate(float(fid.mean()), 0.0, n_traj)
    return FeedbackResult(
        fidelity=est.mean, fidelity_stderr=est.std_error, heat=heat.ravel(), work=work.ravel(),
        cum_heat=heat.sum(axis=1), cum_work=work.sum(axis=1), final_theta=theta_f,
    )


def ks_statistic(x: np.ndarray, y: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov distance."""
    from scipy.stats import ks_2samp

    return float(ks_2samp(x, y).statistic)
