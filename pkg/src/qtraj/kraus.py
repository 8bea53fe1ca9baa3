"""Kraus sets, single-trajectory steppers and the Lindblad reference integrator."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .core import (
    IDENTITY,
    SIGMA_MINUS,
    SIGMA_PLUS,
    QubitState,
    require_hermitian,
)

JUMP, NO_JUMP, WEAK = "jump", "no-jump", "weak"
MAX_RATE_DT = 0.05


@dataclass(slots=True)
class KrausSet:
    """Labeled measurement operators for one time step of length ``dt``.

    ``order="exact"`` sets are complete to 1e-8 * dt. ``order="first"`` marks
    the first-order expansion, which is complete only to O(dt^2).
    """

    operators: list[tuple[int, np.ndarray, str]]
    dt: float
    order: str = "exact"
    tolerance: float = field(default=0.0)

    def __post_init__(self) -> None:
        labels = [lab for lab, _, _ in self.operators]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate Kraus labels {labels}")
        if self.tolerance == 0.0:
            self.tolerance = 1e-8 * self.dt if self.order == "exact" else 1e-2
        res = self.completeness_residual()
        if res > self.tolerance:
            raise ValueError(
                f"Kraus completeness violated: residual {res:.3e} > {self.tolerance:.3e}"
            )

    @property
    def labels(self) -> list[int]:
        return [lab for lab, _, _ in self.operators]

    def matrix(self, label: int) -> np.ndarray:
        for lab, m, _ in self.operators:
            if lab == label:
                return m
        raise KeyError(f"unknown Kraus label {label}")

    def completeness_residual(self) -> float:
        s = sum(m.conj().T @ m for _, m, _ in self.operators)
        return float(np.linalg.norm(s - IDENTITY, 2))


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Square root of a Hermitian positive semidefinite matrix."""
    w, v = np.linalg.eigh(a)
    if w.min() < -1e-12:
        raise ValueError("step too large: no-jump operator is not positive")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def unitary_step(H: np.ndarray, dt: float) -> np.ndarray:
    return expm(-1j * dt * np.asarray(H, dtype=complex))


def kraus_from_generator(
    H,
    jumps: Sequence[tuple[int, float, np.ndarray]],
    dt: float,
    first_order: bool = False,
) -> KrausSet:
    """Kraus set for Hamiltonian ``H`` and jump channels ``(label, rate, L)``.

    The exact form is {A_k U, sqrt(1 - sum A_k^dag A_k) U} with A_k = sqrt(rate dt) L
    and U = exp(-i H dt). The first-order form is the textbook
    M_0 = 1 - i H dt - (1/2) sum A_k^dag A_k, M_k = A_k.
    """
    h = require_hermitian(H, "H")
    total = sum(r * float(np.linalg.norm(L, 2)) ** 2 for _, r, L in jumps)
    if total * dt > MAX_RATE_DT:
        raise ValueError(
            f"step too large: total jump rate * dt = {total * dt:.4g} exceeds {MAX_RATE_DT}"
        )
    amps = [(lab, np.sqrt(r * dt) * np.asarray(L, dtype=complex)) for lab, r, L in jumps]
    d = IDENTITY - sum((a.conj().T @ a for _, a in amps), np.zeros((2, 2), complex))
    if first_order:
        m0 = IDENTITY - 1j * dt * h - 0.5 * (IDENTITY - d)
        ops = [(0, m0, NO_JUMP)] + [(lab, a, JUMP) for lab, a in amps]
        bound = 4.0 * ((total + np.linalg.norm(h, 2)) * dt) ** 2 + 1e-14
        return KrausSet(ops, dt, order="first", tolerance=bound)
    u = unitary_step(h, dt)
    ops = [(0, psd_sqrt(d) @ u, NO_JUMP)] + [(lab, a @ u, JUMP) for lab, a in amps]
    return KrausSet(ops, dt)


def thermal_kraus_set(gamma_q: float, n_q: float, H_t, dt: float, first_order: bool = False) -> KrausSet:
    """Emission (label 1) and absorption (label 2) channels of a thermal bath."""
    if gamma_q * (2 * n_q + 1) * dt > MAX_RATE_DT:
        raise ValueError(
            f"step too large: gamma_q (2 n_q + 1) dt = {gamma_q * (2 * n_q + 1) * dt:.4g} "
            f"exceeds {MAX_RATE_DT}; reduce dt"
        )
    jumps = [(1, gamma_q * (n_q + 1), SIGMA_MINUS), (2, gamma_q * n_q, SIGMA_PLUS)]
    return kraus_from_generator(H_t, jumps, dt, first_order=first_order)


def outcome_probabilities(state: QubitState, kraus: KrausSet) -> np.ndarray:
    v = state.vector
    return np.array([np.linalg.norm(m @ v) ** 2 for _, m, _ in kraus.operators])


def qj_step(state: QubitState, kraus: KrausSet, rng: np.random.Generator) -> tuple[QubitState, int]:
    """Sample one outcome with probability <M_r^dag M_r> and apply it."""
    p = outcome_probabilities(state, kraus)
    if np.all(p < 1e-15):
        raise ValueError("degenerate step: every outcome probability is below 1e-15")
    cdf = np.cumsum(p) / p.sum()
    idx = min(int(np.searchsorted(cdf, rng.random(), side="right")), len(p) - 1)
    label, m, _ = kraus.operators[idx]
    return QubitState.from_vector(m @ state.vector), label


def qsd_step(
    state: QubitState,
    X,
    H,
    gamma_meas: float,
    dt: float,
    rng: np.random.Generator,
    dw: float | None = None,
) -> tuple[QubitState, float]:
    """Diffusive step under continuous monitoring of X (Ito, linear form + renormalization)."""
    x = require_hermitian(X, "X")
    h = require_hermitian(H, "H")
    if gamma_meas * dt > MAX_RATE_DT:
        raise ValueError(f"step too large: gamma_meas dt = {gamma_meas * dt:.4g}")
    if dw is None:
        dw = float(rng.normal(0.0, np.sqrt(dt)))
    v = state.vector
    mean_x = float(np.vdot(v, x @ v).real)
    dy = dw + 2.0 * np.sqrt(gamma_meas) * mean_x * dt
    m = IDENTITY - 1j * dt * h - 0.5 * gamma_meas * dt * (x @ x) + np.sqrt(gamma_meas) * dy * x
    out = m @ v
    if np.linalg.norm(out) < 1e-15:
        raise ValueError("degenerate diffusive step")
    readout = mean_x + dw / (2.0 * np.sqrt(gamma_meas) * dt)
    return QubitState.from_vector(out), readout


def dissipator(L: np.ndarray, rho: np.ndarray) -> np.ndarray:
    ld = L.conj().T
    return L @ rho @ ld - 0.5 * (ld @ L @ rho + rho @ ld @ L)


def lindblad_rhs(rho: np.ndarray, H: np.ndarray, jump_ops: Sequence[tuple[float, np.ndarray]]) -> np.ndarray:
    out = -1j * (H @ rho - rho @ H)
    for rate, L in jump_ops:
        out = out + rate * dissipator(np.asarray(L, dtype=complex), rho)
    return out


def lindblad_step(rho, H, jump_ops: Sequence[tuple[float, np.ndarray]], dt: float) -> np.ndarray:
    """Explicit Euler step of the Lindblad equation."""
    rates = [r for r, _ in jump_ops]
    if rates and max(rates) * dt > MAX_RATE_DT:
        raise ValueError(f"step too large: max rate * dt = {max(rates) * dt:.4g}")
    rho = np.asarray(rho, dtype=complex)
    return rho + dt * lindblad_rhs(rho, np.asarray(H, dtype=complex), jump_ops)


def lindblad_rk4_step(rho, H_fn, jumps_fn, t: float, dt: float) -> np.ndarray:
    """Classical fourth-order Runge-Kutta step for a time-dependent generator."""

    def f(tt, r):
        return lindblad_rhs(r, np.asarray(H_fn(tt), dtype=complex), jumps_fn(tt))

    k1 = f(t, rho)
    k2 = f(t + dt / 2, rho + dt / 2 * k1)
    k3 = f(t + dt / 2, rho + dt / 2 * k2)
    k4 = f(t + dt, rho + dt * k3)
    return rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_lindblad(rho0, H_fn, jumps_fn, times: np.ndarray, substeps: int = 20) -> np.ndarray:
    """RK4 reference solution sampled at ``times`` (first entry is the start time)."""
    rho = np.asarray(rho0, dtype=complex)
    out = np.empty((len(times), 2, 2), dtype=complex)
    out[0] = rho
    for i in range(1, len(times)):
        t0, t1 = times[i - 1], times[i]
        h = (t1 - t0) / substeps
        for j in range(substeps):
            rho = lindblad_rk4_step(rho, H_fn, jumps_fn, t0 + j * h, h)
        if abs(np.trace(rho).real - 1.0) > 1e-6:
            raise RuntimeError(f"trace drift {np.trace(rho).real - 1:.2e} at t = {t1}")
        out[i] = rho
    return out


def liouvillian(H, jump_ops: Sequence[tuple[float, np.ndarray]]) -> np.ndarray:
    """Superoperator acting on row-major vec(rho)."""
    h = np.asarray(H, dtype=complex)
    eye = IDENTITY
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for rate, L in jump_ops:
        L = np.asarray(L, dtype=complex)
        ld_l = L.conj().T @ L
        sup = sup + rate * (np.kron(L, L.conj()) - 0.5 * np.kron(ld_l, eye) - 0.5 * np.kron(eye, ld_l.T))
    return sup


def steady_state(H, jump_ops: Sequence[tuple[float, np.ndarray]]) -> np.ndarray:
    """Null vector of the Liouvillian, normalized to unit trace."""
    sup = liouvillian(H, jump_ops)
    a = np.vstack([sup, np.eye(2, dtype=complex).reshape(1, 4)])
    b = np.zeros(5, dtype=complex)
    b[4] = 1.0
    vec = np.linalg.lstsq(a, b, rcond=None)[0]
    return vec.reshape(2, 2)
