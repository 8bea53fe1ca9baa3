"""Vectorized quantum-jump ensembles with per-step thermodynamic bookkeeping.

A model is a table of per-step data. Step n (t_n -> t_{n+1}) does, in order:

1. switch the energy observable E(t_n) -> E(t_{n+1}) at fixed state (work),
2. apply the unitary U_n (work: change of <E(t_{n+1})>),
3. apply one Kraus outcome of {sqrt(D_n), A_{n,k}} (heat).

The heat of step 3 is split into the tabulated classical heat, the tabulated
drive heat and the quantum heat (the remainder), so the first law closes on
every step by construction. An optional work operator adds the expectation
value <psi|w_n|psi> to the work and removes it from the quantum heat.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import rng as qrng
from .core import IDENTITY
from .kraus import MAX_RATE_DT, psd_sqrt, unitary_step

CHUNK = 16384
PURPOSE_OUTCOME = 1
PURPOSE_CHANNEL = 2


def _expect(op: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """<psi|op|psi> for Hermitian op over arrays of amplitudes."""
    return (
        op[0, 0].real * (a.real**2 + a.imag**2)
        + op[1, 1].real * (b.real**2 + b.imag**2)
        + 2.0 * (op[0, 1] * (a.conj() * b)).real
    )


def _apply(m: np.ndarray, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return m[0, 0] * a + m[0, 1] * b, m[1, 0] * a + m[1, 1] * b


@dataclass(slots=True)
class JumpChannel:
    label: int
    rate: float
    operator: np.ndarray
    dq_cl: float = 0.0
    dq_l: float = 0.0


@dataclass(slots=True)
class QJModel:
    """Per-step tables of a quantum-jump unraveling.

    Arrays carry a leading step axis of length ``n_steps`` (energies:
    ``n_steps + 1``) or length 1 for time-independent models.
    """

    dt: float
    n_steps: int
    energies: np.ndarray
    unitaries: np.ndarray
    kraus: np.ndarray
    labels: tuple[int, ...]
    dq_cl: np.ndarray
    dq_l: np.ndarray
    work_ops: np.ndarray | None = None
    final_energy: np.ndarray | None = None
    name: str = "qj"

    @property
    def static(self) -> bool:
        return self.kraus.shape[0] == 1 and self.energies.shape[0] == 1 and self.unitaries.shape[0] == 1

    @property
    def n_outcomes(self) -> int:
        return self.kraus.shape[1]

    def energy(self, n: int) -> np.ndarray:
        return self.energies[n if self.energies.shape[0] > 1 else 0]

    def unitary(self, n: int) -> np.ndarray:
        return self.unitaries[n if self.unitaries.shape[0] > 1 else 0]

    def ops(self, n: int) -> np.ndarray:
        return self.kraus[n if self.kraus.shape[0] > 1 else 0]

    def heats(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        i = n if self.dq_cl.shape[0] > 1 else 0
        return self.dq_cl[i], self.dq_l[i]

    def work_op(self, n: int) -> np.ndarray | None:
        if self.work_ops is None:
            return None
        return self.work_ops[n if self.work_ops.shape[0] > 1 else 0]

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    def channel(self, n: int) -> list[np.ndarray]:
        """Full Kraus operators (dissipative factor times unitary) of step n."""
        u = self.unitary(n)
        return [k @ u for k in self.ops(n)]


def _kraus_block(channels: Sequence[JumpChannel], dt: float, first_order: bool, H: np.ndarray):
    amps = [np.sqrt(c.rate * dt) * np.asarray(c.operator, dtype=complex) for c in channels]
    total = sum((a.conj().T @ a for a in amps), np.zeros((2, 2), complex))
    if np.linalg.norm(total, 2) > MAX_RATE_DT:
        raise ValueError(
            f"step too large: jump probability per step up to {np.linalg.norm(total, 2):.4g} "
            f"exceeds {MAX_RATE_DT}"
        )
    if first_order:
        m0 = IDENTITY - 1j * dt * H - 0.5 * total
        u = IDENTITY
    else:
        m0 = psd_sqrt(IDENTITY - total)
        u = unitary_step(H, dt)
    return u, np.stack([m0] + amps)


def build_model(
    dt: float,
    n_steps: int,
    energy: Callable[[float], np.ndarray] | np.ndarray,
    hamiltonian: Callable[[float], np.ndarray] | np.ndarray,
    channels: Callable[[float], Sequence[JumpChannel]] | Sequence[JumpChannel],
    work_op: Callable[[float], np.ndarray] | np.ndarray | None = None,
    final_energy: np.ndarray | None = None,
    first_order: bool = False,
    name: str = "qj",
) -> QJModel:
    """Tabulate a model; arrays and lists are treated as static.

    Energies are tabulated at every grid time and jump channels at the step's
    end time t_{n+1}, matching the switch-then-evolve order of a step. The
    Hamiltonian generating the unitary is taken at the midpoint t_n + dt/2, so
    the accumulated phase of a linearly ramped commuting drive is exact.
    """
    static = not any(callable(x) for x in (energy, hamiltonian, channels, work_op))
    steps = [0] if static else list(range(n_steps))
    t_end = [dt * (n + 1) for n in steps]
    if callable(energy):
        energies = np.stack([energy(dt * n) for n in range(n_steps + 1)])
    else:
        energies = np.asarray(energy, dtype=complex)[None]
    us, ks, cl, dl, labels = [], [], [], [], None
    for t in t_end:
        h = np.asarray(hamiltonian(t - 0.5 * dt) if callable(hamiltonian) else hamiltonian, dtype=complex)
        chans = list(channels(t) if callable(channels) else channels)
        lab = (0,) + tuple(c.label for c in chans)
        if labels is None:
            labels = lab
        elif lab != labels:
            raise ValueError("channel labels must not change between steps")
        u, k = _kraus_block(chans, dt, first_order, h)
        us.append(u)
        ks.append(k)
        cl.append([0.0] + [c.dq_cl for c in chans])
        dl.append([0.0] + [c.dq_l for c in chans])
    wops = None
    if work_op is not None:
        if callable(work_op):
            wops = np.stack([work_op(dt * n) for n in range(n_steps)])
        else:
            wops = np.asarray(work_op, dtype=complex)[None]
    return QJModel(
        dt=dt,
        n_steps=n_steps,
        energies=energies,
        unitaries=np.stack(us),
        kraus=np.stack(ks),
        labels=labels,
        dq_cl=np.asarray(cl, dtype=float),
        dq_l=np.asarray(dl, dtype=float),
        work_ops=wops,
        final_energy=None if final_energy is None else np.asarray(final_energy, dtype=complex),
        name=name,
    )



@dataclass(slots=True)
class Branches:
    """All outcomes of one step for a batch of states."""

    a: np.ndarray  # (K+1, n) normalized post-step amplitudes
    b: np.ndarray
    prob: np.ndarray  # (K+1, n)
    work: np.ndarray  # (n,) total work of the step
    work_op: np.ndarray  # (n,) part of ``work`` drawn by the explicit work operator
    heat: np.ndarray  # (K+1, n) energy change of the dissipative part


def branch_step(model: QJModel, n: int, a: np.ndarray, b: np.ndarray) -> Branches:
    e0, e1 = model.energy(n), model.energy(n + 1)
    e_before = _expect(e1, a, b)
    work = e_before - _expect(e0, a, b)
    wop = model.work_op(n)
    w_op = _expect(wop, a, b) if wop is not None else np.zeros(a.shape)
    ua, ub = _apply(model.unitary(n), a, b)
    e_mid = _expect(e1, ua, ub)
    work = work + (e_mid - e_before) + w_op
    ops = model.ops(n)
    k = ops.shape[0]
    pa = np.empty((k,) + a.shape, dtype=complex)
    pb = np.empty_like(pa)
    for j in range(k):
        pa[j], pb[j] = _apply(ops[j], ua, ub)
    prob = pa.real**2 + pa.imag**2 + pb.real**2 + pb.imag**2
    norm = np.sqrt(np.where(prob > 0, prob, 1.0))
    pa /= norm
    pb /= norm
    heat = np.stack([_expect(e1, pa[j], pb[j]) for j in range(k)]) - e_mid
    return Branches(pa, pb, prob, work, w_op, heat)


@dataclass(slots=True)
class EnsembleResult:
    """Per-trajectory totals of a quantum-jump ensemble."""

    W: np.ndarray
    Q_cl: np.ndarray
    Q_q: np.ndarray
    Q_L: np.ndarray
    log_prob: np.ndarray
    n_jumps: np.ndarray
    U_i: np.ndarray
    U_f: np.ndarray
    final_a: np.ndarray
    final_b: np.ndarray
    sample_steps: np.ndarray | None = None
    rho_mean: np.ndarray | None = None  # (S, 3): P_e, Re rho_eg, Im rho_eg
    rho_sq: np.ndarray | None = None  # mean of squares, same layout
    outcomes: np.ndarray | None = None  # (n, N) labels
    states: np.ndarray | None = None  # (n, N + 1, 2)
    increments: dict = field(default_factory=dict)

    @property
    def n_traj(self) -> int:
        return len(self.W)

    def rho_stderr(self) -> np.ndarray:
        var = np.maximum(self.rho_sq - self.rho_mean**2, 0.0)
        return np.sqrt(var / max(self.n_traj - 1, 1))

    def rho_matrices(self) -> np.ndarray:
        pe, re, im = self.rho_mean.T
        out = np.empty((len(pe), 2, 2), dtype=complex)
        out[:, 0, 0] = pe
        out[:, 1, 1] = 1 - pe
        out[:, 0, 1] = re + 1j * im
        out[:, 1, 0] = re - 1j * im
        return out


def _rho_components(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    c = a * b.conj()
    return np.stack([a.real**2 + a.imag**2, c.real, c.imag], axis=1)


def _run_chunk(model: QJModel, a, b, keys, sample_steps, record: bool) -> dict:
    n = len(a)
    acc = {k: np.zeros(n) for k in ("W", "Q_cl", "Q_q", "Q_L", "log_prob")}
    nj = np.zeros(n, dtype=np.int64)
    U_i = _expect(model.energy(0), a, b)
    S = len(sample_steps)
    rsum = np.zeros((S, 3))
    rsq = np.zeros((S, 3))
    slot = {int(s): i for i, s in enumerate(sample_steps)}
    labels = np.asarray(model.labels)
    idx = np.arange(n)
    out: dict = {}
    if record:
        out["outcomes"] = np.zeros((n, model.n_steps), dtype=np.int8)
        out["states"] = np.zeros((n, model.n_steps + 1, 2), dtype=complex)
        out["states"][:, 0, 0], out["states"][:, 0, 1] = a, b
        out["incs"] = {k: np.zeros((n, model.n_steps)) for k in ("dW", "dQ_cl", "dQ_q", "dQ_L")}

    def sample(i, a, b):
        v = _rho_components(a, b)
        rsum[i] = v.sum(axis=0)
        rsq[i] = (v**2).sum(axis=0)

    if 0 in slot:
        sample(slot[0], a, b)
    for step in range(model.n_steps):
        br = branch_step(model, step, a, b)
        total = br.prob.sum(axis=0)
        u = qrng.uniforms(keys, step, PURPOSE_OUTCOME) * total
        cdf = np.cumsum(br.prob, axis=0)
        choice = np.minimum((cdf <= u).sum(axis=0), br.prob.shape[0] - 1)
        a = br.a[choice, idx]
        b = br.b[choice, idx]
        p = br.prob[choice, idx] / total
        dcl, dql = model.heats(step)
        dqcl = dcl[choice]
        dqL = dql[choice]
        dqq = br.heat[choice, idx] - dqcl - dqL - br.work_op
        acc["W"] += br.work
        acc["Q_cl"] += dqcl
        acc["Q_L"] += dqL
        acc["Q_q"] += dqq
        acc["log_prob"] += np.log(p)
        nj += choice != 0
        if record:
            out["outcomes"][:, step] = labels[choice]
            out["states"][:, step + 1, 0], out["states"][:, step + 1, 1] = a, b
            out["incs"]["dW"][:, step] = br.work
            out["incs"]["dQ_cl"][:, step] = dqcl
            out["incs"]["dQ_q"][:, step] = dqq
            out["incs"]["dQ_L"][:, step] = dqL
        if step + 1 in slot:
            sample(slot[step + 1], a, b)
    out.update(acc)
    out.update(
        n_jumps=nj, U_i=U_i, U_f=_expect(model.energy(model.n_steps), a, b),
        final_a=a, final_b=b, rsum=rsum, rsq=rsq,
    )
    return out


def _merge(parts: list[dict], n_total: int, sample_steps, record: bool) -> EnsembleResult:
    cat = lambda k: np.concatenate([p[k] for p in parts]) if parts else np.zeros(0)
    res = EnsembleResult(
        W=cat("W"), Q_cl=cat("Q_cl"), Q_q=cat("Q_q"), Q_L=cat("Q_L"), log_prob=cat("log_prob"),
        n_jumps=cat("n_jumps"), U_i=cat("U_i"), U_f=cat("U_f"),
        final_a=cat("final_a"), final_b=cat("final_b"),
    )
    if len(sample_steps):
        rsum = sum(p["rsum"] for p in parts)
        rsq = sum(p["rsq"] for p in parts)
        res.sample_steps = np.asarray(sample_steps)
        res.rho_mean = rsum / n_total
        res.rho_sq = rsq / n_total
    if record and parts:
        res.outcomes = cat("outcomes")
        res.states = cat("states")
        res.increments = {k: np.concatenate([p["incs"][k] for p in parts]) for k in parts[0]["incs"]}
    return res


def run_qj_reference(
    model: QJModel,
    init_a: np.ndarray,
    init_b: np.ndarray,
    keys: np.ndarray,
    sample_steps: Sequence[int] = (),
    record: bool = False,
    threads: int = 1,
) -> EnsembleResult:
    """Pure-numpy version of ``run_qj`` (same random stream, same results)."""
    init_a = np.asarray(init_a, dtype=complex)
    init_b = np.asarray(init_b, dtype=complex)
    sample_steps = np.asarray(sorted(set(int(s) for s in sample_steps)), dtype=np.int64)
    if len(sample_steps) and (sample_steps[0] < 0 or sample_steps[-1] > model.n_steps):
        raise ValueError("sample steps outside the simulated range")
    n = len(init_a)
    bounds = [(i, min(i + CHUNK, n)) for i in range(0, n, CHUNK)]
    job = lambda lo_hi: _run_chunk(
        model, init_a[lo_hi[0]:lo_hi[1]], init_b[lo_hi[0]:lo_hi[1]], keys[lo_hi[0]:lo_hi[1]],
        sample_steps, record,
    )
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(job, bounds))
    else:
        parts = [job(bh) for bh in bounds]
    return _merge(parts, n, sample_steps, record)


def run_qj(
    model: QJModel,
    init_a: np.ndarray,
    init_b: np.ndarray,
    keys: np.ndarray,
    sample_steps: Sequence[int] = (),
    record: bool = False,
    threads: int = 1,
) -> EnsembleResult:
    """Step-by-step quantum-jump ensemble.

    Trajectory i draws its randomness from ``keys[i]`` only, and chunks have a
    fixed size, so results do not depend on ``threads``.
    """
    from ._kernels import qj_kernel

    init_a = np.ascontiguousarray(init_a, dtype=complex)
    init_b = np.ascontiguousarray(init_b, dtype=complex)
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    steps = sorted(set(int(s) for s in sample_steps))
    if steps and (steps[0] < 0 or steps[-1] > model.n_steps):
        raise ValueError("sample steps outside the simulated range")
    N = model.n_steps
    slot = np.full(N + 1, -1, dtype=np.int64)
    for i, s in enumerate(steps):
        slot[s] = i
    S = len(steps)
    n = len(init_a)
    has_wop = model.work_ops is not None
    wops = model.work_ops if has_wop else np.zeros((1, 2, 2), complex)
    f = {k: np.zeros(n) for k in ("W", "Q_cl", "Q_q", "Q_L", "log_prob", "U_i", "U_f")}
    nj = np.zeros(n, dtype=np.int64)
    fa = np.zeros(n, complex)
    fb = np.zeros(n, complex)
    if record:
        outc = np.zeros((n, N), dtype=np.int8)
        states = np.zeros((n, N + 1, 2), dtype=complex)
        incs = np.zeros((4, n, N))
    else:
        outc = np.zeros((1, 1), dtype=np.int8)
        states = np.zeros((1, 1, 2), dtype=complex)
        incs = np.zeros((4, 1, 1))
    bounds = [(i, min(i + CHUNK, n)) for i in range(0, n, CHUNK)]
    sums = [(np.zeros((S, 3)), np.zeros((S, 3))) for _ in bounds]

    def job(j):
        lo, hi = bounds[j]
        sl = slice(lo, hi)
        qj_kernel(
            model.energies, model.unitaries, model.kraus, model.dq_cl, model.dq_l, wops, has_wop,
            init_a[sl], init_b[sl], keys[sl], slot, S, record, PURPOSE_OUTCOME,
            f["W"][sl], f["Q_cl"][sl], f["Q_q"][sl], f["Q_L"][sl], f["log_prob"][sl], nj[sl],
            f["U_i"][sl], f["U_f"][sl], fa[sl], fb[sl], sums[j][0], sums[j][1],
            outc[sl] if record else outc, states[sl] if record else states,
            incs[:, sl] if record else incs,
        )

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(job, range(len(bounds))))
    else:
        for j in range(len(bounds)):
            job(j)
    res = EnsembleResult(
        W=f["W"], Q_cl=f["Q_cl"], Q_q=f["Q_q"], Q_L=f["Q_L"], log_prob=f["log_prob"],
        n_jumps=nj, U_i=f["U_i"], U_f=f["U_f"], final_a=fa, final_b=fb,
    )
    if S:
        res.sample_steps = np.asarray(steps)
        res.rho_mean = sum(s[0] for s in sums) / max(n, 1)
        res.rho_sq = sum(s[1] for s in sums) / max(n, 1)
    if record:
        res.outcomes = np.asarray(model.labels, dtype=np.int8)[outc]
        res.states = states
        res.increments = dict(zip(("dW", "dQ_cl", "dQ_q", "dQ_L"), incs))
    return res


# ---------------------------------------------------------------------------
# Renewal engine
# ---------------------------------------------------------------------------


def jump_targets(model: QJModel, tol: float = 1e-12) -> np.ndarray | None:
    """Post-jump states of a static model whose jump operators are all rank one.

    Returns an array (K, 2) of normalized target states, or None if some jump
    operator has rank two (its output then depends on the input state).
    """
    if not model.static:
        return None
    ops = model.channel(0)[1:]
    out = []
    for m in ops:
        u, s, _ = np.linalg.svd(m)
        if s[0] == 0.0:
            out.append(np.array([1.0, 0.0], dtype=complex))
            continue
        if s[1] > tol * s[0]:
            return None
        out.append(u[:, 0])
    return np.array(out)


@dataclass(slots=True)
class SegmentTable:
    """No-jump segments starting from a fixed state, indexed by elapsed steps k."""

    a: np.ndarray  # (N+1,) state after k no-jump steps
    b: np.ndarray
    log_surv: np.ndarray  # (N+1,) log of the probability of k consecutive no-jumps
    cum_work: np.ndarray  # (N+1,)
    cum_qq: np.ndarray  # (N+1,) quantum heat of k no-jump steps
    jump_prob: np.ndarray  # (N, K) probabilities of each jump at elapsed step k
    jump_qq: np.ndarray  # (N, K) quantum heat of a jump at elapsed step k


def segment_tables(model: QJModel, starts: np.ndarray, n_max: int) -> list[SegmentTable]:
    a = starts[:, 0].astype(complex).copy()
    b = starts[:, 1].astype(complex).copy()
    m = len(a)
    K = model.n_outcomes - 1
    A = np.zeros((n_max + 1, m), complex)
    B = np.zeros((n_max + 1, m), complex)
    logs = np.zeros((n_max + 1, m))
    cw = np.zeros((n_max + 1, m))
    cq = np.zeros((n_max + 1, m))
    jp = np.zeros((n_max, m, K))
    jq = np.zeros((n_max, m, K))
    A[0], B[0] = a, b
    dcl, dql = model.heats(0)
    for k in range(n_max):
        br = branch_step(model, 0, a, b)
        total = br.prob.sum(axis=0)
        p = br.prob / total
        jp[k] = p[1:].T
        jq[k] = (br.heat[1:] - dcl[1:, None] - dql[1:, None] - br.work_op).T
        with np.errstate(divide="ignore"):
            logs[k + 1] = logs[k] + np.log(p[0])
        cw[k + 1] = cw[k] + br.work
        cq[k + 1] = cq[k] + br.heat[0] - br.work_op
        a, b = br.a[0], br.b[0]
        A[k + 1], B[k + 1] = a, b
    return [
        SegmentTable(A[:, i], B[:, i], logs[:, i], cw[:, i], cq[:, i], jp[:, i], jq[:, i])
        for i in range(m)
    ]


def run_renewal(
    model: QJModel,
    init_states: np.ndarray,
    init_index: np.ndarray,
    keys: np.ndarray,
) -> EnsembleResult:
    """Event-driven sampling of the same discrete-time path measure as ``run_qj``.

    Valid for static models with rank-one jumps: after any jump the state is
    one of finitely many targets, so the no-jump evolution from each possible
    start is tabulated once and the waiting step is drawn by inverse transform
    on the tabulated survival probability.
    """
    targets = jump_targets(model)
    if targets is None:
        raise ValueError("renewal engine needs a static model with rank-one jump operators")
    N = model.n_steps
    K = model.n_outcomes - 1
    starts = np.concatenate([np.asarray(init_states, dtype=complex), targets])
    n_init = len(init_states)
    tables = segment_tables(model, starts, N)
    dcl, dql = model.heats(0)
    n = len(keys)
    state = np.asarray(init_index, dtype=np.int64).copy()
    pos = np.zeros(n, dtype=np.int64)
    W = np.zeros(n)
    Qcl = np.zeros(n)
    Qq = np.zeros(n)
    QL = np.zeros(n)
    logp = np.zeros(n)
    nj = np.zeros(n, dtype=np.int64)
    fa = np.zeros(n, complex)
    fb = np.zeros(n, complex)
    a0 = np.array([tables[s].a[0] for s in state]) if n else np.zeros(0, complex)
    b0 = np.array([tables[s].b[0] for s in state]) if n else np.zeros(0, complex)
    U_i = _expect(model.energy(0), a0, b0)
    active = np.arange(n)
    event = 0
    while len(active):
        u1 = qrng.uniforms(keys[active], event, PURPOSE_OUTCOME)
        u2 = qrng.uniforms(keys[active], event, PURPOSE_CHANNEL)
        logu = np.log(u1)
        still = np.zeros(len(active), dtype=bool)
        cur = state[active]  # snapshot: a trajectory is advanced once per event
        for s in np.unique(cur):
            sel = np.nonzero(cur == s)[0]
            tab = tables[s]
            ids = active[sel]
            rem = N - pos[ids]
            # first k with log_surv[k + 1] < log u, i.e. a jump during elapsed step k
            k = np.searchsorted(-tab.log_surv[1:], -logu[sel], side="right")
            jump = k < rem
            surv = ~jump
            if surv.any():
                r = rem[surv]
                i2 = ids[surv]
                W[i2] += tab.cum_work[r]
                Qq[i2] += tab.cum_qq[r]
                logp[i2] += tab.log_surv[r]
                fa[i2] = tab.a[r]
                fb[i2] = tab.b[r]
            if jump.any():
                kj = k[jump]
                i2 = ids[jump]
                probs = tab.jump_prob[kj]
                cdf = np.cumsum(probs, axis=1)
                ch = np.minimum((cdf <= u2[sel][jump, None] * cdf[:, -1:]).sum(axis=1), K - 1)
                W[i2] += tab.cum_work[kj + 1]
                Qq[i2] += tab.cum_qq[kj] + tab.jump_qq[kj, ch]
                Qcl[i2] += dcl[1 + ch]
                QL[i2] += dql[1 + ch]
                logp[i2] += tab.log_surv[kj] + np.log(probs[np.arange(len(kj)), ch])
                nj[i2] += 1
                pos[i2] += kj + 1
                state[i2] = n_init + ch
                done = pos[i2] >= N
                if done.any():
                    d = i2[done]
                    fa[d] = targets[ch[done], 0]
                    fb[d] = targets[ch[done], 1]
                still[sel[jump][~done]] = True
        active = active[still]
        event += 1
    U_f = _expect(model.energy(N), fa, fb)
    return EnsembleResult(W, Qcl, Qq, QL, logp, nj, U_i, U_f, fa, fb)


# ---------------------------------------------------------------------------
# Exhaustive enumeration
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class PathEnsemble:
    """Every outcome sequence with nonzero probability, for a small model."""

    prob: np.ndarray  # joint probability including the initial-state weight
    init_index: np.ndarray
    paths: np.ndarray  # (P, N) labels
    W: np.ndarray
    Q_cl: np.ndarray
    Q_q: np.ndarray
    Q_L: np.ndarray
    log_prob: np.ndarray  # log p(record | initial state)
    U_i: np.ndarray
    U_f: np.ndarray
    final_a: np.ndarray
    final_b: np.ndarray

    def mean(self, values: np.ndarray) -> float:
        return float(np.sum(self.prob * values))


def enumerate_paths(model: QJModel, init_states: np.ndarray, init_probs: np.ndarray,
                    min_prob: float = 0.0) -> PathEnsemble:
    """Branch every outcome of every step (K^N growth; keep N small)."""
    init_states = np.asarray(init_states, dtype=complex)
    keep = np.asarray(init_probs) > 0
    a = init_states[keep, 0]
    b = init_states[keep, 1]
    prob = np.asarray(init_probs, dtype=float)[keep]
    iidx = np.nonzero(keep)[0]
    m = len(a)
    W = np.zeros(m)
    Qcl = np.zeros(m)
    Qq = np.zeros(m)
    QL = np.zeros(m)
    logp = np.zeros(m)
    paths = np.zeros((m, 0), dtype=np.int64)
    U_i = _expect(model.energy(0), a, b)
    labels = np.asarray(model.labels)
    for step in range(model.n_steps):
        br = branch_step(model, step, a, b)
        K1 = br.prob.shape[0]
        total = br.prob.sum(axis=0)
        p = br.prob / total
        dcl, dql = model.heats(step)
        rep = lambda x: np.tile(x, K1)
        ch = np.repeat(np.arange(K1), len(a))
        pk = p.reshape(-1)
        new_prob = rep(prob) * pk
        sel = new_prob > min_prob
        a = br.a.reshape(-1)[sel]
        b = br.b.reshape(-1)[sel]
        W = rep(W + br.work)[sel]
        Qcl = (rep(Qcl) + dcl[ch])[sel]
        QL = (rep(QL) + dql[ch])[sel]
        Qq = (rep(Qq) + (br.heat - dcl[:, None] - dql[:, None] - br.work_op).reshape(-1))[sel]
        with np.errstate(divide="ignore"):
            logp = (rep(logp) + np.log(pk))[sel]
        paths = np.concatenate([np.tile(paths, (K1, 1)), labels[ch][:, None]], axis=1)[sel]
        iidx = rep(iidx)[sel]
        U_i = rep(U_i)[sel]
        prob = new_prob[sel]
    U_f = _expect(model.energy(model.n_steps), a, b)
    return PathEnsemble(prob, iidx, paths, W, Qcl, Qq, QL, logp, U_i, U_f, a, b)


def channel_density(model: QJModel, rho0: np.ndarray, steps: Sequence[int]) -> np.ndarray:
    """Density matrices of the discrete Kraus channel at the requested steps."""
    want = sorted(set(int(s) for s in steps))
    out = {}
    rho = np.asarray(rho0, dtype=complex)
    if 0 in want:
        out[0] = rho
    for step in range(model.n_steps):
        rho = sum(k @ rho @ k.conj().T for k in model.channel(step))
        if step + 1 in want:
            out[step + 1] = rho
    return np.stack([out[s] for s in want])
