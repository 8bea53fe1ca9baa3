"""Driven fluorescence: Floquet master equation vs optical Bloch equations.

Conventions. Rotating frame at the laser frequency omega_L, detuning
delta = omega_0 - omega_L, Rabi frequency g, laser phase phi:

    H~ = delta Pi_e + (g/2)(cos(phi) sigma_x + sin(phi) sigma_y)

The dressed states of H~ at phi = 0 are |+> = (c, s), |-> = (-s, c) with
theta = atan2(g, delta)/2; a nonzero phase rotates them by
R = diag(e^{-i phi/2}, e^{i phi/2}). The coherence s~ = <sigma_minus> = rho_eg
picks up a factor e^{-i phi}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .core import (
    PROJ_E,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    dressed_basis,
    thermal_excited_population,
    thermal_occupation,
)
from .engine import JumpChannel, QJModel, build_model
from .kraus import KrausSet, kraus_from_generator, liouvillian, steady_state, thermal_kraus_set
from .protocols import EG_BASIS, ProtocolSpec, default_dt

# ---------------------------------------------------------------------------
# Frame helpers
# ---------------------------------------------------------------------------


def phase_factor(phi: float) -> complex:
    """e^{-i phi}, exact on multiples of pi/2."""
    q = phi / (math.pi / 2)
    if abs(q - round(q)) < 1e-15:
        return (1, -1j, -1, 1j)[int(round(q)) % 4]
    return complex(math.cos(phi), -math.sin(phi))


def laser_rotation(phi: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])


def drive_operator(phi: float = 0.0) -> np.ndarray:
    """cos(phi) sigma_x + sin(phi) sigma_y."""
    return math.cos(phi) * SIGMA_X + math.sin(phi) * SIGMA_Y


def rabi_hamiltonian(g: float, delta: float, phi: float = 0.0) -> np.ndarray:
    return delta * PROJ_E + 0.5 * g * drive_operator(phi)


def bare_energy_rotating(omega_0: float, g: float, phi: float = 0.0) -> np.ndarray:
    """Lab-frame qubit energy H_q(t) written in the rotating frame (static)."""
    return omega_0 * PROJ_E + 0.5 * g * drive_operator(phi)


def lab_hamiltonian(t: float, omega_0: float, omega_L: float, g: float, phi: float = 0.0) -> np.ndarray:
    ph = np.exp(-1j * (omega_L * t + phi))
    return omega_0 * PROJ_E + 0.5 * g * (ph * SIGMA_PLUS + np.conj(ph) * SIGMA_MINUS)


def lab_hamiltonian_rate(t: float, omega_L: float, g: float, phi: float = 0.0) -> np.ndarray:
    """dH_q/dt in the lab frame."""
    ph = np.exp(-1j * (omega_L * t + phi))
    return 0.5 * g * omega_L * (-1j * ph * SIGMA_PLUS + 1j * np.conj(ph) * SIGMA_MINUS)


def to_lab(state_vec: np.ndarray, t: float, omega_L: float) -> np.ndarray:
    """Rotating-frame amplitudes -> lab-frame amplitudes."""
    return np.array([np.exp(-1j * omega_L * t) * state_vec[0], state_vec[1]])


def work_operator_rotating(omega_L: float, g: float, dt: float, phi: float = 0.0) -> np.ndarray:
    """Rotating-frame observable whose expectation is dt <dH_q/dt>.

    With drive (g/2) sigma_x this is (omega_L g dt / 2) sigma_y.
    """
    r = laser_rotation(phi)
    return 0.5 * omega_L * g * dt * (r @ SIGMA_Y @ r.conj().T)


@dataclass(frozen=True, slots=True)
class DressedFrame:
    theta: float
    Omega_R: float
    plus: np.ndarray
    minus: np.ndarray

    @property
    def Sigma_z(self) -> np.ndarray:
        return np.outer(self.plus, self.plus.conj()) - np.outer(self.minus, self.minus.conj())

    @property
    def Sigma_minus(self) -> np.ndarray:
        return np.outer(self.minus, self.plus.conj())

    @property
    def Sigma_plus(self) -> np.ndarray:
        return self.Sigma_minus.conj().T

    def populations(self, a, b) -> tuple[np.ndarray, np.ndarray]:
        pp = np.abs(np.conj(self.plus[0]) * a + np.conj(self.plus[1]) * b) ** 2
        pm = np.abs(np.conj(self.minus[0]) * a + np.conj(self.minus[1]) * b) ** 2
        return pp, pm


def dressed_frame(g: float, delta: float, phi: float = 0.0) -> DressedFrame:
    d = dressed_basis(g, delta)
    r = laser_rotation(phi)
    return DressedFrame(d.theta, d.rabi_freq, r @ d.plus_state.vector, r @ d.minus_state.vector)


# ---------------------------------------------------------------------------
# Floquet master equation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class FloquetRates:
    g0_down: float
    g0_up: float
    g1_down: float
    g1_up: float
    g2_down: float
    g2_up: float

    def __post_init__(self) -> None:
        for k in self.__slots__:
            if not getattr(self, k) >= 0:
                raise ValueError(f"rate {k} must be nonnegative")

    @property
    def total(self) -> float:
        return self.g0_down + self.g0_up + self.g1_down + self.g1_up + self.g2_down + self.g2_up


def floquet_rates(
    g: float,
    delta: float,
    omega_L: float,
    T: float = 0.0,
    gamma_q: float = 1.0,
    spectral_density: Callable[[float], float] | None = None,
    occupation: Callable[[float], float] | None = None,
) -> FloquetRates:
    """Dressed-basis rates at the three frequencies omega_L and omega_L +- Omega_R.

    Defaults: flat spectrum Gamma(w) = gamma_q, Bose occupation at T.
    """
    d = dressed_basis(g, delta)
    c, s = math.cos(d.theta), math.sin(d.theta)
    W = d.rabi_freq
    if omega_L - W <= 0:
        raise ValueError("the lower sideband omega_L - Omega_R must be positive")
    G = spectral_density or (lambda w: gamma_q)
    N = occupation or (lambda w: thermal_occupation(w, T))
    w1, w2 = omega_L + W, omega_L - W
    k0 = 0.25 * math.sin(2 * d.theta) ** 2 * G(omega_L)
    return FloquetRates(
        g0_down=k0 * (N(omega_L) + 1),
        g0_up=k0 * N(omega_L),
        g1_down=c**4 * G(w1) * (N(w1) + 1),
        g1_up=c**4 * G(w1) * N(w1),
        g2_down=s**4 * G(w2) * N(w2),
        g2_up=s**4 * G(w2) * (N(w2) + 1),
    )


def fme_outcome_energies(omega_L: float, Omega_R: float) -> dict[int, tuple[float, float]]:
    """(dQ_cl, dQ_L) of each outcome, per the sign table of the photon-counting record."""
    wl, W = omega_L, Omega_R
    return {
        0: (0.0, 0.0),
        1: (-(wl + W), wl),
        2: (wl + W, -wl),
        3: (wl - W, -wl),
        4: (-(wl - W), wl),
        5: (-wl, wl),
        6: (wl, -wl),
    }


def fme_channels(rates: FloquetRates, frame: DressedFrame, omega_L: float) -> list[JumpChannel]:
    e = fme_outcome_energies(omega_L, frame.Omega_R)
    ops = {
        1: (rates.g1_down, frame.Sigma_minus),
        2: (rates.g1_up, frame.Sigma_plus),
        3: (rates.g2_down, frame.Sigma_minus),
        4: (rates.g2_up, frame.Sigma_plus),
        5: (rates.g0_down, frame.Sigma_z),
        6: (rates.g0_up, frame.Sigma_z),
    }
    return [JumpChannel(k, r, L, *e[k]) for k, (r, L) in ops.items()]


def fme_effective_hamiltonian(frame: DressedFrame) -> np.ndarray:
    return 0.5 * frame.Omega_R * frame.Sigma_z


def fme_kraus_set(rates: FloquetRates, Omega_R: float, dt: float, frame: DressedFrame | None = None,
                  first_order: bool = False) -> KrausSet:
    """Seven-outcome Kraus set; label k in 1..6 as in the outcome table, 0 = no photon.

    Meaningful for Omega_R dt >> 1 (coarse-graining longer than a Rabi period);
    the flag ``coarse_grained`` below records whether that holds.
    """
    if frame is None:
        raise ValueError("a dressed frame is required")
    chans = fme_channels(rates, frame, 0.0)
    ks = kraus_from_generator(
        fme_effective_hamiltonian(frame), [(c.label, c.rate, c.operator) for c in chans], dt, first_order
    )
    return ks


def coarse_grained(Omega_R: float, dt: float) -> bool:
    return Omega_R * dt > 10.0


def fme_lindblad_jumps(rates: FloquetRates, frame: DressedFrame) -> list[tuple[float, np.ndarray]]:
    return [(c.rate, c.operator) for c in fme_channels(rates, frame, 0.0)]


def fme_heat_increments(outcome: int, state: np.ndarray, rates: FloquetRates, omega_L: float,
                        Omega_R: float, dt: float, frame: DressedFrame) -> tuple[float, float, float]:
    """Tabulated (dQ_cl, dQ_q, dQ_L) of one outcome for a pre-step state.

    The no-jump quantum heat is the first-order weak-measurement value. The
    step engine records dt <w~> as work and keeps the remainder as quantum
    heat, so its increment equals this one minus the work increment.
    """
    if outcome not in range(7):
        raise ValueError(f"FME outcome must lie in 0..6, got {outcome}")
    dcl, dl = fme_outcome_energies(omega_L, Omega_R)[outcome]
    v = np.asarray(state, dtype=complex)
    pp = abs(np.vdot(frame.plus, v)) ** 2
    pm = abs(np.vdot(frame.minus, v)) ** 2
    pp, pm = pp / (pp + pm), pm / (pp + pm)
    if outcome in (1, 3):
        dq = Omega_R * pm
    elif outcome in (2, 4):
        dq = -Omega_R * pp
    elif outcome in (5, 6):
        dq = 0.0
    else:
        dq = -Omega_R * (rates.g1_down - rates.g1_up + rates.g2_down - rates.g2_up) * dt * pp * pm
    return dcl, dq, dl


def fme_model(g: float, delta: float, omega_L: float, T: float, gamma_q: float, dt: float,
              n_steps: int, phi: float = 0.0, record_work: bool = True) -> QJModel:
    frame = dressed_frame(g, delta, phi)
    rates = floquet_rates(g, delta, omega_L, T, gamma_q)
    h = fme_effective_hamiltonian(frame)
    return build_model(
        dt, n_steps, h, h, fme_channels(rates, frame, omega_L),
        work_op=work_operator_rotating(omega_L, g, dt, phi) if record_work else None,
        name="fme",
    )


def fme_steady_populations(rates: FloquetRates) -> tuple[float, float]:
    up = rates.g1_up + rates.g2_up
    down = rates.g1_down + rates.g2_down
    pp = up / (up + down)
    return pp, 1.0 - pp


def fme_protocol(g: float, delta: float, omega_L: float, T: float, gamma_q: float, t_f: float,
                 dt: float | None = None, phi: float = 0.0) -> ProtocolSpec:
    """Dressed-basis two-point measurement with steady-state dressed populations at both ends."""
    rates = floquet_rates(g, delta, omega_L, T, gamma_q)
    dt = dt or 0.01 / rates.total
    n = max(1, int(round(t_f / dt)))
    model = fme_model(g, delta, omega_L, T, gamma_q, t_f / n, n, phi)
    frame = dressed_frame(g, delta, phi)
    p = np.array(fme_steady_populations(rates))
    basis = np.array([frame.plus, frame.minus])
    return ProtocolSpec("fme", model, basis, p, temperature=T, final_basis=basis,
                        final_ref_probs=p, params=dict(g=g, delta=delta, omega_L=omega_L, T=T,
                                                       gamma_q=gamma_q, t_f=t_f, phi=phi))


# ---------------------------------------------------------------------------
# Optical Bloch equations
# ---------------------------------------------------------------------------


def obe_kraus_set(gamma_q: float, n_q: float, H_q: np.ndarray, dt: float, first_order: bool = False) -> KrausSet:
    """Emission/absorption jumps between |e> and |g> with the full driven Hamiltonian."""
    return thermal_kraus_set(gamma_q, n_q, H_q, dt, first_order)


def obe_channels(gamma_q: float, omega_0: float, T: float) -> list[JumpChannel]:
    n = thermal_occupation(omega_0, T)
    return [
        JumpChannel(1, gamma_q * (n + 1), SIGMA_MINUS, -omega_0),
        JumpChannel(2, gamma_q * n, SIGMA_PLUS, omega_0),
    ]


def obe_lindblad_jumps(gamma_q: float, omega_0: float, T: float) -> list[tuple[float, np.ndarray]]:
    return [(c.rate, c.operator) for c in obe_channels(gamma_q, omega_0, T)]


def obe_model(g: float, delta: float, omega_0: float, T: float, gamma_q: float, dt: float,
              n_steps: int, phi: float = 0.0, switch_off: bool = False) -> QJModel:
    """Energy observable is the driven qubit energy; the unitary step's energy change is the
    drive work (it equals dt <w~> to first order)."""
    return build_model(
        dt, n_steps,
        bare_energy_rotating(omega_0, g, phi),
        rabi_hamiltonian(g, delta, phi),
        obe_channels(gamma_q, omega_0, T),
        final_energy=omega_0 * PROJ_E if switch_off else None,
        name="obe",
    )


def _x_factor(g: float, delta: float, gamma_q: float, n_q: float) -> float:
    gp = gamma_q * (2 * n_q + 1)
    return 2 * delta**2 / g**2 + gp**2 / (2 * g**2)


def obe_steady_state(g: float, delta: float, gamma_q: float, n_q: float, phi: float = 0.0) -> tuple[float, complex]:
    """Closed-form (P_e, s~) of the driven, damped qubit."""
    if g == 0:
        return n_q / (2 * n_q + 1), 0j
    X = _x_factor(g, delta, gamma_q, n_q)
    m = 2 * n_q + 1
    pe = (n_q + 0.5 / (1 + X)) / m
    s = -(delta / (g * m) + 0.5j * gamma_q / g) / (1 + X)
    return pe, s * phase_factor(phi)


def obe_steady_state_numeric(g: float, delta: float, gamma_q: float, omega_0: float, T: float,
                             phi: float = 0.0) -> np.ndarray:
    return steady_state(rabi_hamiltonian(g, delta, phi), obe_lindblad_jumps(gamma_q, omega_0, T))


@dataclass(frozen=True, slots=True)
class SteadyFlows:
    P_L: float
    P_res: float
    W_dot: float
    Qq_dot: float
    sigma_i: float
    P_e: float
    s: complex

    @property
    def balance(self) -> float:
        return self.P_L + self.P_res


def steady_flows(g: float, delta: float, omega_L: float, gamma_q: float, T: float,
                 description: str, phi: float = 0.0) -> SteadyFlows:
    """Steady-state energy flows of either description (omega_0 = omega_L + delta)."""
    omega_0 = omega_L + delta
    if description.upper() == "OBE":
        n = thermal_occupation(omega_0, T)
        if g == 0:
            pe, s = obe_steady_state(g, delta, gamma_q, n, phi)
            return SteadyFlows(0.0, 0.0, 0.0, 0.0, 0.0, pe, s)
        X = _x_factor(g, delta, gamma_q, n)
        pe, s = obe_steady_state(g, delta, gamma_q, n, phi)
        w_dot = omega_L * gamma_q / 2 / (1 + X)
        qq_dot = delta * gamma_q / 2 / (1 + X)
        p_res = -omega_0 * gamma_q * ((n + 1) * pe - n * (1 - pe))
        p_l = w_dot + qq_dot
    elif description.upper() == "FME":
        rates = floquet_rates(g, delta, omega_L, T, gamma_q)
        frame = dressed_frame(g, delta, 0.0)
        pp, pm = fme_steady_populations(rates)
        c, sn = math.cos(frame.theta), math.sin(frame.theta)
        pe = c * c * pp + sn * sn * pm
        s = c * sn * (pp - pm) * phase_factor(phi)
        e = fme_outcome_energies(omega_L, frame.Omega_R)
        flows = {
            1: rates.g1_down * pp, 2: rates.g1_up * pm, 3: rates.g2_down * pp,
            4: rates.g2_up * pm, 5: rates.g0_down, 6: rates.g0_up,
        }
        p_res = sum(e[k][0] * f for k, f in flows.items())
        p_l = sum(e[k][1] * f for k, f in flows.items())
        w_dot = 0.0
        qq_dot = 0.0
    else:
        raise ValueError("description must be 'FME' or 'OBE'")
    if T > 0:
        sigma = -p_res / T
    else:
        sigma = math.inf if p_res < 0 else 0.0
    return SteadyFlows(p_l, p_res, w_dot, qq_dot, sigma, pe, s)


COMPARE_COLUMNS = (
    "theta", "g", "Pe_obe", "Pe_fme", "re_s", "im_s_obe", "im_s_fme",
    "PL_obe", "PL_fme", "Pres_obe", "Pres_fme", "sigma_i", "re_s_obe",
)


def compare_sweep(n_points: int = 20, delta: float = 1e-2, gamma_q: float = 1e-3, hw_over_kT: float = 10.0,
                  omega_L: float = 1.0, g_max: float = 0.1, phi: float = math.pi / 2) -> list[dict]:
    """Steady states of both descriptions on a uniform grid of dressing angles.

    At fixed detuning the angle is limited by the largest coupling g_max; the
    grid is theta_k = k theta_max / n_points, k = 1..n_points. ``re_s`` is the
    Floquet coherence's real part, ``sigma_i`` the OBE entropy production rate.
    """
    T = omega_L / hw_over_kT
    th_max = 0.5 * math.atan2(g_max, delta)
    rows = []
    for k in range(1, n_points + 1):
        th = th_max * k / n_points
        g = delta * math.tan(2 * th)
        o = steady_flows(g, delta, omega_L, gamma_q, T, "OBE", phi)
        f = steady_flows(g, delta, omega_L, gamma_q, T, "FME", phi)
        rows.append(dict(
            theta=th, g=g, Pe_obe=o.P_e, Pe_fme=f.P_e, re_s=f.s.real, im_s_obe=o.s.imag,
            im_s_fme=f.s.imag, PL_obe=o.P_L, PL_fme=f.P_L, Pres_obe=o.P_res, Pres_fme=f.P_res,
            sigma_i=o.sigma_i, re_s_obe=o.s.real,
        ))
    return rows


# ---------------------------------------------------------------------------
# Jarzynski protocol for the driven qubit
# ---------------------------------------------------------------------------


def rabi_je_protocol(g_over_gamma: float, hw_over_kT: float = 3.0, gamma_minus: float = 1e-3,
                     omega_0: float = 1.0, delta: float = 0.0, n_rabi: float = 2.0,
                     dt: float | None = None) -> ProtocolSpec:
    """Energy measured with the drive off, drive on for n_rabi Rabi periods, energy measured again.

    Rates are fixed by Gamma_minus = gamma_q (n + 1); g = g_over_gamma * Gamma_minus.
    """
    T = omega_0 / hw_over_kT
    n = thermal_occupation(omega_0, T)
    gamma_q = gamma_minus / (n + 1)
    g = g_over_gamma * gamma_minus
    t_f = 2 * math.pi * n_rabi / g
    if dt is None:
        dt = min(default_dt(gamma_q, n), 0.02 / g)
    steps = max(1, int(round(t_f / dt)))
    model = obe_model(g, delta, omega_0, T, gamma_q, t_f / steps, steps, switch_off=True)
    pe = thermal_excited_population(omega_0, T)
    p = np.array([pe, 1 - pe])
    return ProtocolSpec(
        "rabi-je", model, EG_BASIS, p, temperature=T, final_basis=EG_BASIS, final_ref_probs=p,
        delta_F=0.0, engine="renewal",
        params=dict(g=g, g_over_gamma=g_over_gamma, T=T, gamma_q=gamma_q, t_f=t_f, omega_0=omega_0),
    )


def evolve_static(rho0: np.ndarray, H: np.ndarray, jumps, times: np.ndarray) -> np.ndarray:
    """Exact Lindblad evolution for a time-independent generator (matrix exponential)."""
    L = liouvillian(H, jumps)
    v0 = np.asarray(rho0, dtype=complex).reshape(4)
    return np.stack([(expm(L * t) @ v0).reshape(2, 2) for t in times])
