"""Hybrid qubit / mechanical-oscillator dynamics.

Conventions: X = b + b^dag, P = i(b^dag - b), beta = (x + i p) / 2, so a
coherent state has V_X = V_P = 1, C_XP = 0 and 4 V_X V_P - C_XP^2 >= 4.
The qubit follows driven Bloch equations with the instantaneous detuning
delta_T = omega_0 - omega_L + g_m x and the occupation n(omega_0 + g_m x).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from . import rng as qrng
from .core import thermal_occupation

PURPOSE_QSD = 5


@dataclass(frozen=True, slots=True)
class OptomechParams:
    omega_0: float = 1e4
    Omega_m: float = 0.05
    g_m: float = 0.1
    g: float = 0.0
    omega_L: float | None = None  # defaults to omega_0 (resonant at rest)
    gamma_q: float = 1.0
    T: float = 0.0

    @property
    def laser(self) -> float:
        return self.omega_0 if self.omega_L is None else self.omega_L

    def regime_flags(self) -> dict:
        return {
            "adiabatic": self.gamma_q >= 10 * self.Omega_m,
            "semiclassical": self.g_m <= 0.3 * self.gamma_q,
            "ultrastrong": self.g_m >= self.Omega_m,
        }

    def check_regime(self) -> None:
        bad = [k for k, ok in self.regime_flags().items() if not ok]
        if bad:
            warnings.warn(f"outside the intended regime: {', '.join(bad)}", stacklevel=2)

    def occupation(self, x: float) -> float:
        w = self.omega_0 + self.g_m * x
        return thermal_occupation(w, self.T) if w > 0 else 0.0

    def detuning(self, x: float) -> float:
        return self.omega_0 - self.laser + self.g_m * x


@dataclass(slots=True)
class HybridSemiclassicalState:
    P_e: float
    s_tilde: complex
    beta: complex

    def __post_init__(self) -> None:
        if not -1e-9 <= self.P_e <= 1 + 1e-9:
            raise ValueError(f"P_e = {self.P_e} outside [0, 1]")
        if abs(self.s_tilde) ** 2 > self.P_e * (1 - self.P_e) + 1e-9:
            raise ValueError(f"|s|^2 = {abs(self.s_tilde) ** 2:.3e} exceeds P_e (1 - P_e)")

    @property
    def x(self) -> float:
        return 2.0 * self.beta.real

    @property
    def p(self) -> float:
        return 2.0 * self.beta.imag


# ---------------------------------------------------------------------------
# Semiclassical coupled evolution
# ---------------------------------------------------------------------------


@nb.njit(cache=True)
def _occ(w, T):
    if T <= 0.0 or w <= 0.0:
        return 0.0
    return 1.0 / math.expm1(w / T)


@nb.njit(cache=True)
def _rhs(y, omega_0, omega_L, Om, gm, g, gq, T):
    # y = (P_e, Re s, Im s, Re beta, Im beta, W)
    pe, sr, si, br, bi = y[0], y[1], y[2], y[3], y[4]
    x = 2.0 * br
    n = _occ(omega_0 + gm * x, T)
    gT = gq * (2.0 * n + 1.0)
    dT = omega_0 - omega_L + gm * x
    out = np.empty(6)
    out[0] = -gT * pe + gq * n - g * si
    # ds = -i dT s - gT/2 s + i g (P_e - 1/2)
    out[1] = dT * si - 0.5 * gT * sr
    out[2] = -dT * sr - 0.5 * gT * si + g * (pe - 0.5)
    # dbeta = -i Om beta - i gm P_e
    out[3] = Om * bi
    out[4] = -Om * br - gm * pe
    # dW = g_m xdot P_e, with xdot = 2 Re(dbeta)
    out[5] = gm * 2.0 * out[3] * pe
    return out


@nb.njit(cache=True)
def _integrate(y0, dt, n_steps, stride, omega_0, omega_L, Om, gm, g, gq, T):
    n_out = n_steps // stride + 1
    traj = np.empty((n_out, 6))
    y = y0.copy()
    traj[0] = y
    k = 1
    for i in range(n_steps):
        k1 = _rhs(y, omega_0, omega_L, Om, gm, g, gq, T)
        k2 = _rhs(y + 0.5 * dt * k1, omega_0, omega_L, Om, gm, g, gq, T)
        k3 = _rhs(y + 0.5 * dt * k2, omega_0, omega_L, Om, gm, g, gq, T)
        k4 = _rhs(y + dt * k3, omega_0, omega_L, Om, gm, g, gq, T)
        y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (i + 1) % stride == 0:
            traj[k] = y
            k += 1
    return traj


def _pack(state: HybridSemiclassicalState) -> np.ndarray:
    return np.array([state.P_e, state.s_tilde.real, state.s_tilde.imag,
                     state.beta.real, state.beta.imag, 0.0])


def _args(params: OptomechParams) -> tuple:
    return (params.omega_0, params.laser, params.Omega_m, params.g_m, params.g, params.gamma_q, params.T)


def _check_dt(params: OptomechParams, dt: float) -> None:
    if dt > 0.01 / params.gamma_q * (1 + 1e-12):
        raise ValueError(f"dt = {dt:.3g} exceeds 0.01 / gamma_q")


def semiclassical_step(state: HybridSemiclassicalState, params: OptomechParams, dt: float) -> HybridSemiclassicalState:
    """One RK4 step of (P_e, s~, beta)."""
    _check_dt(params, dt)
    y = _integrate(_pack(state), dt, 1, 1, *_args(params))[-1]
    try:
        return HybridSemiclassicalState(float(y[0]), complex(y[1], y[2]), complex(y[3], y[4]))
    except ValueError as exc:
        raise ValueError(f"invariant violated after step from {state}: {exc}") from None


@dataclass(slots=True)
class SemiclassicalRun:
    """Sampled semiclassical trajectory with the accumulated work on the qubit."""

    t: np.ndarray
    P_e: np.ndarray
    s: np.ndarray
    beta: np.ndarray
    W: np.ndarray
    params: OptomechParams

    @property
    def x(self) -> np.ndarray:
        return 2.0 * self.beta.real

    @property
    def p(self) -> np.ndarray:
        return 2.0 * self.beta.imag

    @property
    def U_m(self) -> np.ndarray:
        return self.params.Omega_m * np.abs(self.beta) ** 2

    @property
    def omega_q(self) -> np.ndarray:
        return self.params.omega_0 + self.params.g_m * self.x

    @property
    def U_q(self) -> np.ndarray:
        return self.omega_q * self.P_e

    @property
    def S_vn(self) -> np.ndarray:
        return shannon(self.P_e)

    def rows(self) -> list[tuple]:
        return [(float(t), float(x), float(p), float(pe), float(s.real), float(s.imag), float(um), float(w))
                for t, x, p, pe, s, um, w in zip(self.t, self.x, self.p, self.P_e, self.s, self.U_m, self.W)]


def shannon(p) -> np.ndarray:
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(p > 0, p * np.log(p), 0.0) - np.where(p < 1, (1 - p) * np.log1p(-p), 0.0)
    return h


def semiclassical_run(state: HybridSemiclassicalState, params: OptomechParams, duration: float,
                      dt: float | None = None, stride: int = 1) -> SemiclassicalRun:
    dt = 0.01 / params.gamma_q if dt is None else dt
    _check_dt(params, dt)
    n = max(1, int(round(duration / dt)))
    n = stride * max(1, math.ceil(n / stride))  # the last sample lands on t = duration
    dt = duration / n
    _check_dt(params, dt)
    traj = _integrate(_pack(state), dt, n, stride, *_args(params))
    t = dt * stride * np.arange(traj.shape[0])
    pe = traj[:, 0]
    s = traj[:, 1] + 1j * traj[:, 2]
    if pe.min() < -1e-9 or pe.max() > 1 + 1e-9 or np.max(np.abs(s) ** 2 - pe * (1 - pe)) > 1e-9:
        raise ValueError("Bloch-ball constraint violated; reduce dt")
    return SemiclassicalRun(t, pe, s, traj[:, 3] + 1j * traj[:, 4], traj[:, 5], params)


def thermal_start(params: OptomechParams, beta: complex) -> HybridSemiclassicalState:
    n = params.occupation(2.0 * beta.real)
    return HybridSemiclassicalState(n / (2 * n + 1), 0j, beta)


def battery_work_check(run: SemiclassicalRun) -> tuple[float, float]:
    """(W on the qubit, change of the oscillator energy); they cancel when g = 0."""
    if run.params.g != 0:
        raise ValueError("the battery identity holds without laser drive (g = 0)")
    return float(run.W[-1] - run.W[0]), float(run.U_m[-1] - run.U_m[0])


def reversible_work(x_f: float, omega_0: float, g_m: float, T: float) -> float:
    """Work of a quasistatic frequency ramp omega_0 -> omega_0 + g_m x_f at temperature T."""
    if T <= 0:
        raise ValueError("temperature must be positive")
    a = -(omega_0 + g_m * x_f) / T
    b = -omega_0 / T
    return -T * (np.logaddexp(0.0, a) - np.logaddexp(0.0, b))


def reversible_heat(x_f: float, omega_0: float, g_m: float, T: float) -> float:
    """T times the entropy change of the thermal qubit along the same ramp."""
    pe = lambda w: 1.0 / (1.0 + math.exp(w / T))
    return T * float(shannon(pe(omega_0 + g_m * x_f)) - shannon(pe(omega_0)))


@dataclass(slots=True)
class LandauerMetrics:
    W: np.ndarray  # per quarter oscillation
    Q: np.ndarray
    dS_vn: np.ndarray
    dU_m: np.ndarray
    entropy_produced: np.ndarray  # dS_vn - Q / T
    dissipated_per_period: np.ndarray  # net oscillator energy change per period


def landauer_cycle_metrics(run: SemiclassicalRun) -> LandauerMetrics:
    """Quarter-resolved work, heat and entropy of a g = 0 run over whole periods."""
    par = run.params
    if par.g != 0:
        raise ValueError("Landauer cycles are defined without laser drive (g = 0)")
    if par.T <= 0:
        raise ValueError("Landauer cycles need a positive temperature")
    period = 2 * math.pi / par.Omega_m
    n_q = int(math.floor(run.t[-1] / (period / 4) + 1e-6))
    idx = np.array([int(np.argmin(np.abs(run.t - k * period / 4))) for k in range(n_q + 1)])
    W = np.diff(run.W[idx])
    Uq = run.U_q[idx]
    Q = np.diff(Uq) - W
    dS = np.diff(run.S_vn[idx])
    dU = np.diff(run.U_m[idx])
    per = run.U_m[idx[::4]]
    return LandauerMetrics(W, Q, dS, dU, dS - Q / par.T, np.diff(per))


# ---------------------------------------------------------------------------
# Qubit-induced noise rate (quantum regression)
# ---------------------------------------------------------------------------


def bloch_matrix(delta: float, g: float, gamma_q: float, n: float) -> tuple[np.ndarray, np.ndarray]:
    """(A, b) with d(<sz>, <s->, <s+>)/dt = A v + b for the driven damped qubit."""
    gT = gamma_q * (2 * n + 1)
    A = np.array([
        [-gT, 1j * g, -1j * g],
        [0.5j * g, -1j * delta - 0.5 * gT, 0.0],
        [-0.5j * g, 0.0, 1j * delta - 0.5 * gT],
    ], dtype=complex)
    b = np.array([-gamma_q, 0.0, 0.0], dtype=complex)
    return A, b


def population_noise(delta: float, g: float, gamma_q: float, n: float, omega: float = 0.0) -> complex:
    """int_0^inf dtau e^{i omega tau} <dPi_e(tau) dPi_e(0)> in the steady state."""
    A, b = bloch_matrix(delta, g, gamma_q, n)
    v = np.linalg.solve(A, -b)
    z, s = v[0].real, v[1]
    R = np.array([1 - z * z, s * (1 - z), -np.conj(s) * (1 + z)], dtype=complex)
    M = 1j * omega * np.eye(3) + A
    for attempt in range(3):
        try:
            sol = np.linalg.solve(M, R)
            break
        except np.linalg.LinAlgError:
            warnings.warn(f"singular Bloch matrix at delta = {delta}; perturbing", stacklevel=2)
            M = M + 1e-12 * (attempt + 1) * np.eye(3)
    else:
        raise np.linalg.LinAlgError("Bloch matrix remains singular")
    return -0.25 * sol[0]


def gamma_opt(delta_T: float, params: OptomechParams, n: float | None = None) -> float:
    """Gamma_opt = 2 g_m^2 Re int_0^inf <dPi_e(tau) dPi_e(0)> dtau."""
    if n is None:
        n = thermal_occupation(params.omega_0, params.T) if params.T > 0 else 0.0
    return float(2 * params.g_m**2 * population_noise(delta_T, params.g, params.gamma_q, n).real)


def gamma_opt_zero_temperature(delta: float, g: float, g_m: float, gamma_q: float) -> float:
    return 2 * g_m**2 * g**2 * (4 * delta**2 + gamma_q**2) * (g**2 + 2 * gamma_q**2) / (
        gamma_q * (4 * delta**2 + 2 * g**2 + gamma_q**2) ** 3)


def gamma_opt_undriven(n: float, g_m: float, gamma_q: float) -> float:
    """Closed form without laser; the rate entering it is the total damping gamma_q (2n + 1)."""
    gT = gamma_q * (2 * n + 1)
    return 2 * g_m**2 / gT * n * (1 + n) / (2 * n + 1) ** 2


# ---------------------------------------------------------------------------
# Gaussian oscillator states
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class GaussianMOState:
    x: float
    p: float
    V_X: float = 1.0
    V_P: float = 1.0
    C_XP: float = 0.0

    def __post_init__(self) -> None:
        if self.V_X <= 0 or self.V_P <= 0:
            raise ValueError(f"variances must be positive, got V_X={self.V_X}, V_P={self.V_P}")

    @classmethod
    def coherent(cls, beta: complex) -> GaussianMOState:
        return cls(2 * beta.real, 2 * beta.imag)

    @property
    def uncertainty(self) -> float:
        return 4 * self.V_X * self.V_P - self.C_XP**2

    @property
    def phonons(self) -> float:
        return (self.x**2 + self.p**2 + self.V_X + self.V_P - 2) / 4

    def wigner_parameters(self) -> tuple[float, float, float]:
        d = self.uncertainty
        return 2 * self.V_P / d, self.C_XP / d, 2 * self.V_X / d

    def wigner(self, u, v) -> np.ndarray:
        a, b, c = self.wigner_parameters()
        du = np.asarray(u) - self.x
        dv = np.asarray(v) - self.p
        return np.sqrt(a * c - b * b) / np.pi * np.exp(-a * du**2 + 2 * b * du * dv - c * dv**2)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.p, self.V_X, self.V_P, self.C_XP])


def _gauss_rhs(v, G, Om, force):
    x, p, vx, vp, c = v
    return np.array([Om * p, -Om * x - force, Om * c, -Om * c + 4 * G, 2 * Om * (vp - vx)])


def gaussian_ensemble_step(state: GaussianMOState, Gamma_opt: float, Omega_m: float, dt: float,
                           force: float = 0.0) -> GaussianMOState:
    """RK4 step of the five moments under free rotation plus momentum diffusion 4 Gamma_opt.

    ``force`` is the mean radiation-pressure term 2 g_m P_e entering dp/dt.
    """
    if dt > 0.01 / Omega_m * (1 + 1e-12):
        raise ValueError("dt exceeds 0.01 / Omega_m")
    v = state.as_array()
    k1 = _gauss_rhs(v, Gamma_opt, Omega_m, force)
    k2 = _gauss_rhs(v + 0.5 * dt * k1, Gamma_opt, Omega_m, force)
    k3 = _gauss_rhs(v + 0.5 * dt * k2, Gamma_opt, Omega_m, force)
    k4 = _gauss_rhs(v + dt * k3, Gamma_opt, Omega_m, force)
    return GaussianMOState(*(v + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)))


def _qsd_drift(v, G, Om, force):
    x, p, vx, vp, c = v
    return np.array([
        Om * p, -Om * x - force,
        Om * c - 4 * G * vx * vx,
        -Om * c + 4 * G - G * c * c,
        2 * Om * (vp - vx) - 4 * G * vx * c,
    ])


def gaussian_qsd_step(state: GaussianMOState, Gamma_opt: float, Omega_m: float, dt: float,
                      rng: np.random.Generator | None = None, dw: float | None = None,
                      force: float = 0.0) -> tuple[GaussianMOState, float]:
    """Conditional five-moment update under continuous position monitoring at rate Gamma_opt.

    Means receive the innovation (2 V_X, C_XP) sqrt(Gamma) dw; the second
    moments follow a deterministic Riccati equation integrated with RK4.
    Returns the new state and the readout <X> + dw / (2 dt sqrt(Gamma)).
    """
    if dt > 0.01 / Omega_m * (1 + 1e-12):
        raise ValueError("dt exceeds 0.01 / Omega_m")
    if dw is None:
        dw = float((rng or np.random.default_rng()).normal(0.0, math.sqrt(dt)))
    v = state.as_array()
    k1 = _qsd_drift(v, Gamma_opt, Omega_m, force)
    k2 = _qsd_drift(v + 0.5 * dt * k1, Gamma_opt, Omega_m, force)
    k3 = _qsd_drift(v + 0.5 * dt * k2, Gamma_opt, Omega_m, force)
    k4 = _qsd_drift(v + dt * k3, Gamma_opt, Omega_m, force)
    new = v + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    sq = math.sqrt(max(Gamma_opt, 0.0))
    new[0] += 2 * sq * state.V_X * dw
    new[1] += sq * state.C_XP * dw
    if new[2] <= 0 or new[3] <= 0:
        raise ValueError(f"variance became nonpositive: V_X={new[2]:.3g}, V_P={new[3]:.3g}")
    readout = state.x + (dw / (2 * dt * sq) if sq > 0 else 0.0)
    return GaussianMOState(*new), readout


def gaussian_ensemble_run(state: GaussianMOState, Gamma_fn, Omega_m: float, duration: float,
                          dt: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the ensemble moments; Gamma_fn(t, x) gives the instantaneous rate."""
    dt = 0.01 / Omega_m if dt is None else dt
    n = max(1, int(round(duration / dt)))
    dt = duration / n
    out = np.empty((n + 1, 5))
    out[0] = state.as_array()
    for i in range(n):
        state = gaussian_ensemble_step(state, Gamma_fn(i * dt, state.x), Omega_m, dt)
        out[i + 1] = state.as_array()
    return dt * np.arange(n + 1), out


def gaussian_qsd_ensemble(state: GaussianMOState, Gamma_opt: float, Omega_m: float, duration: float,
                          n_traj: int, seed: int, dt: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized constant-rate QSD trajectories; returns (t, moments (n_steps + 1, n_traj, 5))."""
    dt = 0.01 / Omega_m if dt is None else dt
    n = max(1, int(round(duration / dt)))
    dt = duration / n
    keys = qrng.derive(seed, np.arange(n_traj))
    v = np.tile(state.as_array()[:, None], (1, n_traj))
    out = np.empty((n + 1, n_traj, 5))
    out[0] = v.T
    sq = math.sqrt(Gamma_opt)
    G = Gamma_opt
    f = lambda v: np.stack(_qsd_drift(v, G, Omega_m, 0.0))
    for i in range(n):
        dw = qrng.normals(keys, i, PURPOSE_QSD) * math.sqrt(dt)
        k1 = f(v)
        k2 = f(v + 0.5 * dt * k1)
        k3 = f(v + 0.5 * dt * k2)
        k4 = f(v + dt * k3)
        new = v + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        new[0] += 2 * sq * v[2] * dw
        new[1] += sq * v[4] * dw
        v = new
        out[i + 1] = v.T
    return dt * np.arange(n + 1), out


# ---------------------------------------------------------------------------
# Long-time drift along one monitored trajectory
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class DriftSeries:
    t: np.ndarray  # centres of the averaging windows
    U_m: np.ndarray
    P_e: np.ndarray
    Gamma_opt: np.ndarray
    raw: np.ndarray = field(repr=False)  # (n_steps + 1, 8): t, x, p, V_X, V_P, C_XP, P_e, Gamma_opt


def adiabatic_population(params: OptomechParams, x: float) -> float:
    """Steady-state P_e at the detuning and occupation set by position x."""
    n = params.occupation(x)
    gT = params.gamma_q * (2 * n + 1)
    if params.g == 0:
        return n / (2 * n + 1)
    d = params.detuning(x)
    X = 2 * d * d / params.g**2 + gT * gT / (2 * params.g**2)
    return (n + 0.5 / (1 + X)) / (2 * n + 1)


def long_time_run(params: OptomechParams, duration: float, seed: int, beta0: complex,
                  dt: float | None = None, average_periods: int = 20) -> DriftSeries:
    """Monitored oscillator with the qubit slaved adiabatically to x_gamma(t).

    Gamma_opt and P_e are refreshed every outer step from the current mean
    position; the mean radiation-pressure force 2 g_m P_e acts on p.
    """
    dt = 0.01 / params.Omega_m if dt is None else dt
    n = max(1, int(round(duration / dt)))
    keys = qrng.derive(seed, np.arange(1))
    st = GaussianMOState.coherent(beta0)
    raw = np.empty((n + 1, 8))

    def rates(x):
        pe = adiabatic_population(params, x)
        gam = gamma_opt(params.detuning(x), params, n=params.occupation(x))
        return pe, max(gam, 0.0)

    pe, gam = rates(st.x)
    raw[0] = (0.0, *st.as_array(), pe, gam)
    for i in range(n):
        dw = float(qrng.normals(keys, i, PURPOSE_QSD)[0]) * math.sqrt(dt)
        st, _ = gaussian_qsd_step(st, gam, params.Omega_m, dt, dw=dw, force=2 * params.g_m * pe)
        pe, gam = rates(st.x)
        raw[i + 1] = ((i + 1) * dt, *st.as_array(), pe, gam)
    window = max(1, int(round(average_periods * 2 * math.pi / params.Omega_m / dt)))
    n_win = (n + 1) // window
    if n_win == 0:
        window, n_win = n + 1, 1
    blk = raw[: n_win * window].reshape(n_win, window, 8)
    U = params.Omega_m * (blk[..., 1] ** 2 + blk[..., 2] ** 2 + blk[..., 3] + blk[..., 4] - 2) / 4
    return DriftSeries(blk[..., 0].mean(axis=1), U.mean(axis=1), blk[..., 6].mean(axis=1),
                       blk[..., 7].mean(axis=1), raw)
