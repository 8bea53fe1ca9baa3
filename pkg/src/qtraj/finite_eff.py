"""Finite detection efficiency: filtered states, fictitious trajectories, corrected Jarzynski.

Each emission or absorption is detected with probability eta. For drives
diagonal in {|e>, |g>} the conditional state stays diagonal, so the hidden
full-efficiency trajectory is a two-state Markov chain observed through the
detected clicks. The correction term is a posterior expectation over that
chain; it is computed exactly with transfer matrices, or sampled with
backward messages and forward draws.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import rng as qrng
from .engine import QJModel, run_qj
from .kraus import JUMP, NO_JUMP, KrausSet
from .ledger import FTEstimate, mean_estimate
from .protocols import PURPOSE_INIT, ProtocolSpec, _sample_index

PURPOSE_DETECT = 6
PURPOSE_FICTITIOUS = 7

# refined labels of fictitious trajectories at undetected steps
FICT_NONE, FICT_EMISSION, FICT_ABSORPTION = 0, -1, -2


# ---------------------------------------------------------------------------
# Density-matrix stepping
# ---------------------------------------------------------------------------


def e0_eta(rho: np.ndarray, eta: float, kraus: KrausSet) -> np.ndarray:
    """No-detection super-operator M0 rho M0^dag + (1 - eta) sum_k M_k rho M_k^dag."""
    out = np.zeros((2, 2), dtype=complex)
    for _, m, kind in kraus.operators:
        w = 1.0 if kind == NO_JUMP else 1.0 - eta
        out += w * (m @ rho @ m.conj().T)
    return out


def imperfect_qj_step(rho: np.ndarray, eta: float, kraus: KrausSet,
                      rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """One step of the conditional density matrix under detection efficiency eta."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    rho = np.asarray(rho, dtype=complex)
    branches = []
    for lab, m, kind in kraus.operators:
        if kind == JUMP:
            x = eta * (m @ rho @ m.conj().T)
            branches.append((lab, x, float(np.trace(x).real)))
    x0 = e0_eta(rho, eta, kraus)
    branches.insert(0, (0, x0, float(np.trace(x0).real)))
    probs = np.array([p for _, _, p in branches])
    k = min(int(np.searchsorted(np.cumsum(probs) / probs.sum(), rng.random(), side="right")), len(probs) - 1)
    lab, x, p = branches[k]
    return x / p, lab


# ---------------------------------------------------------------------------
# Two-state chain tables
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class ChainTables:
    """Per-step probabilities for hidden states 0 = |e>, 1 = |g>.

    stay[n, x]: no transition; flip[n, x]: transition (emission from e,
    absorption from g); heat[n, x]: classical heat of that transition.
    """

    stay: np.ndarray
    flip: np.ndarray
    heat: np.ndarray

    @property
    def n_steps(self) -> int:
        return self.stay.shape[0]


def chain_tables(model: QJModel, tol: float = 1e-12) -> ChainTables:
    """Extract the two-state chain of a diagonal thermal model (labels 0, 1 = emission, 2 = absorption)."""
    if tuple(model.labels) != (0, 1, 2):
        raise ValueError("finite-efficiency analysis needs the thermal labels (0, 1, 2)")
    N = model.n_steps
    stay = np.empty((N, 2))
    flip = np.empty((N, 2))
    heat = np.empty((N, 2))
    for n in range(N):
        ops = model.channel(n)
        offdiag = max(abs(ops[0][0, 1]), abs(ops[0][1, 0]), abs(model.energy(n + 1)[0, 1]))
        if offdiag > tol:
            raise ValueError("finite-efficiency analysis is restricted to drives diagonal in {|e>, |g>}")
        stay[n, 0] = abs(ops[0][0, 0]) ** 2
        stay[n, 1] = abs(ops[0][1, 1]) ** 2
        flip[n, 0] = abs(ops[1][1, 0]) ** 2
        flip[n, 1] = abs(ops[2][0, 1]) ** 2
        dcl, _ = model.heats(n)
        heat[n] = dcl[1], dcl[2]
    return ChainTables(stay, flip, heat)


# ---------------------------------------------------------------------------
# Imperfect-detection ensembles
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class ImperfectEnsemble:
    """Detected records with their hidden full-efficiency counterparts.

    obs[i, n] in {0, 1, 2}: detected outcome of step n (0 = nothing detected).
    """

    eta: float
    obs: np.ndarray
    init: np.ndarray  # 0 = |e>, 1 = |g>
    final: np.ndarray
    dU: np.ndarray
    Q_cl_eta: np.ndarray
    Q_cl_true: np.ndarray
    keys: np.ndarray

    @property
    def n_traj(self) -> int:
        return len(self.init)

    def trajectory(self, i: int) -> ImperfectTrajectory:
        return ImperfectTrajectory(self.obs[i], int(self.init[i]), int(self.final[i]),
                                   float(self.Q_cl_eta[i]), float(self.dU[i]))


@dataclass(slots=True)
class ImperfectTrajectory:
    record: np.ndarray
    init: int
    final: int
    Q_cl_eta: float
    dU: float

    @property
    def n_undetected(self) -> int:
        return int(np.sum(self.record == 0))


def simulate_imperfect(spec: ProtocolSpec, eta: float, n_traj: int, seed: int) -> ImperfectEnsemble:
    """Sample full-efficiency trajectories and thin their clicks with efficiency eta.

    Binomial thinning of a full record has the same law as the eta-instrument
    acting on the conditional density matrix.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    chain_tables(spec.model)  # validates the drive
    keys = qrng.derive(seed, np.arange(n_traj))
    init = _sample_index(qrng.uniforms(keys, 0, PURPOSE_INIT), spec.init_probs)
    res = run_qj(spec.model, spec.init_states[init, 0], spec.init_states[init, 1], keys, record=True)
    out = res.outcomes.astype(np.int8)
    N = spec.model.n_steps
    obs = out.copy()
    for n in range(N):
        u = qrng.uniforms(keys, n, PURPOSE_DETECT)
        obs[:, n] = np.where((out[:, n] != 0) & (u >= eta), 0, out[:, n])
    dq = res.increments["dQ_cl"]
    q_eta = np.where(obs != 0, dq, 0.0).sum(axis=1)
    final = (np.abs(res.final_a) ** 2 < 0.5).astype(np.int64)
    return ImperfectEnsemble(eta, obs, init, final, res.U_f - res.U_i, q_eta, res.Q_cl, keys)


def filter_populations(tables: ChainTables, record: np.ndarray, init: int, eta: float) -> np.ndarray:
    """P_e of the conditional density matrix after each step (the filtered state)."""
    p = np.zeros((len(record) + 1, 2))
    p[0, init] = 1.0
    for n, o in enumerate(record):
        st, fl = tables.stay[n], tables.flip[n]
        cur = p[n]
        if o == 0:
            nxt = np.array([cur[0] * st[0] + (1 - eta) * cur[1] * fl[1],
                            cur[1] * st[1] + (1 - eta) * cur[0] * fl[0]])
        elif o == 1:
            nxt = np.array([0.0, eta * cur[0] * fl[0]])
        else:
            nxt = np.array([eta * cur[1] * fl[1], 0.0])
        p[n + 1] = nxt / nxt.sum()
    return p[:, 0]


def _transfer(tables: ChainTables, obs: np.ndarray, init: np.ndarray, eta: float, beta_tilt: float) -> np.ndarray:
    """Forward messages over hidden paths consistent with ``obs``.

    Undetected transitions carry the weight e^{beta_tilt * heat}. Returns the
    normalized messages (n, 2) and their accumulated log normalization.
    """
    n = len(init)
    a = np.zeros((n, 2))
    a[np.arange(n), init] = 1.0
    logscale = np.zeros(n)
    for k in range(tables.n_steps):
        st, fl, ht = tables.stay[k], tables.flip[k], tables.heat[k]
        o = obs[:, k]
        w = (1 - eta) * fl * np.exp(beta_tilt * ht)
        e = np.where(o == 0, a[:, 0] * st[0] + a[:, 1] * w[1], np.where(o == 2, eta * a[:, 1] * fl[1], 0.0))
        g = np.where(o == 0, a[:, 1] * st[1] + a[:, 0] * w[0], np.where(o == 1, eta * a[:, 0] * fl[0], 0.0))
        a = np.stack([e, g], axis=1)
        s = a.sum(axis=1)
        s = np.where(s > 0, s, 1.0)
        a /= s[:, None]
        logscale += np.log(s)
    return a, logscale


def sigma_exact(ens: ImperfectEnsemble, spec: ProtocolSpec) -> np.ndarray:
    """sigma_eta = -log E[e^{(Q_cl[F] - Q_cl^eta)/T} | record, endpoints], exactly."""
    tab = chain_tables(spec.model)
    beta = 1.0 / spec.temperature
    a1, l1 = _transfer(tab, ens.obs, ens.init, ens.eta, beta)
    a0, l0 = _transfer(tab, ens.obs, ens.init, ens.eta, 0.0)
    idx = np.arange(ens.n_traj)
    return -(np.log(a1[idx, ens.final]) + l1 - np.log(a0[idx, ens.final]) - l0)


def measured_entropy(ens: ImperfectEnsemble, spec: ProtocolSpec) -> np.ndarray:
    """(Delta U - Q_cl^eta - Delta F) / T."""
    return (ens.dU - ens.Q_cl_eta - spec.delta_F) / spec.temperature


def uncorrected_je(ens: ImperfectEnsemble, spec: ProtocolSpec) -> FTEstimate:
    with np.errstate(over="ignore"):
        return mean_estimate(np.exp(-measured_entropy(ens, spec)))


def corrected_je(ens: ImperfectEnsemble, spec: ProtocolSpec, sigma: np.ndarray) -> FTEstimate:
    with np.errstate(over="ignore"):
        return mean_estimate(np.exp(-measured_entropy(ens, spec) - sigma))


def exact_uncorrected_je(spec: ProtocolSpec, eta: float, lam: float = 1.0) -> float:
    """Exact <e^{-lam Delta_i s^eta}> from the tilted chain (detected heat tilted only)."""
    tab = chain_tables(spec.model)
    beta = 1.0 / spec.temperature
    u = np.array([np.real(np.diag(spec.model.energy(0)))]).ravel()
    uf = np.real(np.diag(spec.final_energy_op))
    total = 0.0
    for i in range(2):
        if spec.init_probs[i] == 0:
            continue
        v = np.zeros(2)
        v[i] = 1.0
        for k in range(tab.n_steps):
            st, fl, ht = tab.stay[k], tab.flip[k], tab.heat[k]
            w = fl * ((1 - eta) + eta * np.exp(lam * beta * ht))
            v = np.array([v[0] * st[0] + v[1] * w[1], v[1] * st[1] + v[0] * w[0]])
        for f in range(2):
            total += spec.init_probs[i] * v[f] * math.exp(-lam * beta * (uf[f] - u[i] - spec.delta_F))
    return total


# ---------------------------------------------------------------------------
# Fictitious trajectories
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class FictitiousTrajectory:
    refined_labels: np.ndarray
    Q_cl_full: float
    cond_prob: float


def _path_weight(tab: ChainTables, labels: np.ndarray, init: int, final: int, eta: float) -> tuple[float, float]:
    """(probability, classical heat) of a refined label sequence."""
    x = init
    p = 1.0
    q = 0.0
    for k, lab in enumerate(labels):
        if lab == FICT_NONE:
            p *= tab.stay[k, x]
            continue
        emit = lab in (1, FICT_EMISSION)
        if (x == 0) != emit:
            return 0.0, 0.0
        p *= tab.flip[k, x] * (eta if lab > 0 else 1 - eta)
        q += tab.heat[k, x]
        x = 1 - x
    return (p if x == final else 0.0), q


def enumerate_fictitious(traj: ImperfectTrajectory, spec: ProtocolSpec, eta: float,
                         max_paths: int = 10_000) -> list[FictitiousTrajectory]:
    """All 3^{N_0} refinements of a record; zero-probability ones are dropped."""
    tab = chain_tables(spec.model)
    und = np.nonzero(traj.record == 0)[0]
    if 3 ** len(und) > max_paths:
        raise ValueError(f"3^{len(und)} fictitious trajectories exceed max_paths = {max_paths}")
    out = []
    base = traj.record.astype(np.int64).copy()
    for combo in itertools.product((FICT_NONE, FICT_EMISSION, FICT_ABSORPTION), repeat=len(und)):
        labels = base.copy()
        labels[und] = combo
        p, q = _path_weight(tab, labels, traj.init, traj.final, eta)
        if p > 0:
            out.append(FictitiousTrajectory(labels, q, p))
    z = sum(f.cond_prob for f in out)
    for f in out:
        f.cond_prob /= z
    return out


def _backward_flip_probs(tab: ChainTables, obs: np.ndarray, final: np.ndarray, eta: float) -> np.ndarray:
    """P(undetected transition at step k | hidden state x at k, future record, final state).

    Vectorized over trajectories: obs (n, N), final (n,) -> (n, N, 2).
    """
    obs = np.atleast_2d(obs)
    final = np.atleast_1d(final)
    n, N = obs.shape
    b = np.zeros((n, 2))
    b[np.arange(n), final] = 1.0
    pf = np.zeros((n, N, 2))
    for k in range(N - 1, -1, -1):
        st, fl = tab.stay[k], tab.flip[k]
        o = obs[:, k]
        w_stay = st * b
        w_flip = (1 - eta) * fl * b[:, ::-1]
        tot = w_stay + w_flip
        und = o == 0
        pf[und, k] = np.where(tot[und] > 0, w_flip[und] / np.where(tot[und] > 0, tot[und], 1.0), 0.0)
        nb = np.where(und[:, None], tot, 0.0)
        nb[o == 1, 0] = eta * fl[0] * b[o == 1, 1]
        nb[o == 2, 1] = eta * fl[1] * b[o == 2, 0]
        s = nb.sum(axis=1)
        b = nb / np.where(s > 0, s, 1.0)[:, None]
    return pf


def sample_fictitious(traj: ImperfectTrajectory, spec: ProtocolSpec, eta: float, n_samples: int,
                      seed: int) -> list[FictitiousTrajectory]:
    """Draw refinements from the exact posterior p(F | record, endpoints)."""
    tab = chain_tables(spec.model)
    pf = _backward_flip_probs(tab, traj.record, traj.final, eta)[0]
    keys = qrng.derive(seed, np.arange(n_samples))
    N = tab.n_steps
    x = np.full(n_samples, traj.init)
    q = np.zeros(n_samples)
    labels = np.zeros((n_samples, N), dtype=np.int64)
    for k in range(N):
        o = traj.record[k]
        if o != 0:
            labels[:, k] = o
            x = 1 - x
            continue
        u = qrng.uniforms(keys, k, PURPOSE_FICTITIOUS)
        flip = u < pf[k, x]
        labels[flip, k] = np.where(x[flip] == 0, FICT_EMISSION, FICT_ABSORPTION)
        q[flip] += tab.heat[k, x[flip]]
        x = np.where(flip, 1 - x, x)
    det_q = sum(tab.heat[k, 0 if traj.record[k] == 1 else 1] for k in range(N) if traj.record[k] != 0)
    out = []
    for s in range(n_samples):
        p, _ = _path_weight(tab, labels[s], traj.init, traj.final, eta)
        out.append(FictitiousTrajectory(labels[s], q[s] + det_q, p))
    return out


def sigma_correction(traj: ImperfectTrajectory, samples: list[FictitiousTrajectory], T: float) -> float:
    """-log of the sample mean of e^{(Q_cl[F] - Q_cl^eta)/T}."""
    if not samples:
        raise ValueError("need at least one fictitious sample")
    q = np.array([f.Q_cl_full for f in samples])
    x = (q - traj.Q_cl_eta) / T
    m = x.max()
    return -(m + math.log(np.mean(np.exp(x - m))))


def sigma_sampled(ens: ImperfectEnsemble, spec: ProtocolSpec, n_samples: int) -> np.ndarray:
    """Monte-Carlo sigma_eta for every trajectory (n_samples posterior draws each).

    Draws for trajectory i use the key of trajectory i with a dedicated purpose,
    so results do not depend on batching.
    """
    from ._kernels import fictitious_kernel

    tab = chain_tables(spec.model)
    beta = 1.0 / spec.temperature
    out = np.empty(ens.n_traj)
    heat = np.ascontiguousarray(tab.heat)
    for start in range(0, ens.n_traj, 1024):
        sl = slice(start, min(start + 1024, ens.n_traj))
        pf_block = _backward_flip_probs(tab, ens.obs[sl], ens.final[sl], ens.eta)
        for j, i in enumerate(range(sl.start, sl.stop)):
            out[i] = -fictitious_kernel(
                np.ascontiguousarray(pf_block[j]), heat, ens.obs[i].astype(np.int64),
                int(ens.init[i]), np.uint64(ens.keys[i]), n_samples, beta, PURPOSE_FICTITIOUS,
            )
    return out


@dataclass(slots=True)
class FiniteEfficiencyResult:
    eta: float
    uncorrected: FTEstimate
    corrected: FTEstimate
    corrected_exact: FTEstimate
    n_traj: int
    n_fict: int


def finite_efficiency_experiment(spec: ProtocolSpec, eta: float, n_traj: int, n_fict: int,
                                 seed: int) -> FiniteEfficiencyResult:
    ens = simulate_imperfect(spec, eta, n_traj, seed)
    s_exact = sigma_exact(ens, spec)
    s_mc = sigma_sampled(ens, spec, n_fict) if n_fict > 0 else s_exact
    return FiniteEfficiencyResult(
        eta, uncorrected_je(ens, spec), corrected_je(ens, spec, s_mc),
        corrected_je(ens, spec, s_exact), n_traj, n_fict,
    )
