"""Qubit states, operators, dressed basis and thermal occupations.

Conventions: hbar = k_B = 1, the state vector is ordered (amp_e, amp_g),
sigma_z = diag(1, -1) and sigma_minus = |g><e|.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-12

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T.copy()
PROJ_E = np.array([[1, 0], [0, 0]], dtype=complex)
PROJ_G = np.array([[0, 0], [0, 1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

for _m in (SIGMA_X, SIGMA_Y, SIGMA_Z, SIGMA_MINUS, SIGMA_PLUS, PROJ_E, PROJ_G, IDENTITY):
    _m.setflags(write=False)


@dataclass(frozen=True, slots=True)
class QubitState:
    """Normalized pure state amp_e|e> + amp_g|g>."""

    amp_e: complex
    amp_g: complex

    def __post_init__(self) -> None:
        if not (np.isfinite(self.amp_e) and np.isfinite(self.amp_g)):
            raise ValueError("state amplitudes must be finite")
        norm = abs(self.amp_e) ** 2 + abs(self.amp_g) ** 2
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: |psi|^2 = {norm!r}")

    @classmethod
    def from_vector(cls, vec, normalize: bool = True) -> QubitState:
        v = np.asarray(vec, dtype=complex).reshape(2)
        if not np.all(np.isfinite(v)):
            raise ValueError("state amplitudes must be finite")
        if normalize:
            n = np.linalg.norm(v)
            if n == 0.0:
                raise ValueError("cannot normalize the zero vector")
            v = v / n
        return cls(complex(v[0]), complex(v[1]))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.amp_e, self.amp_g], dtype=complex)

    def density(self) -> np.ndarray:
        v = self.vector
        return np.outer(v, v.conj())

    @property
    def p_e(self) -> float:
        return abs(self.amp_e) ** 2

    @property
    def p_g(self) -> float:
        return abs(self.amp_g) ** 2

    def canonical(self) -> np.ndarray:
        """Vector with the global phase fixed (amp_g real >= 0, else amp_e)."""
        v = self.vector
        ref = v[1] if abs(v[1]) > 1e-9 else v[0]
        return v * (abs(ref) / ref)

    def equals(self, other: QubitState, tol: float = 1e-12) -> bool:
        """Equality modulo global phase."""
        return abs(abs(np.vdot(self.vector, other.vector)) - 1.0) <= tol

    def bloch_angles(self) -> tuple[float, float]:
        """(theta, phi) such that bloch_state(theta, phi) reproduces the state."""
        theta = 2.0 * math.atan2(abs(self.amp_g), abs(self.amp_e))
        if abs(self.amp_e) < 1e-15 or abs(self.amp_g) < 1e-15:
            return theta, 0.0
        phi = float(np.angle(self.amp_e) - np.angle(self.amp_g))
        return theta, phi


EXCITED = QubitState(1.0 + 0j, 0j)
GROUND = QubitState(0j, 1.0 + 0j)


def bloch_state(theta: float, phi: float) -> QubitState:
    """cos(theta/2) e^{i phi/2}|e> + sin(theta/2) e^{-i phi/2}|g>."""
    return QubitState(
        complex(math.cos(theta / 2) * np.exp(0.5j * phi)),
        complex(math.sin(theta / 2) * np.exp(-0.5j * phi)),
    )


def orthogonal_state(state: QubitState) -> QubitState:
    """The unique (up to phase) state orthogonal to ``state``."""
    return QubitState(-state.amp_g.conjugate(), state.amp_e.conjugate())


def bloch_vector(state_or_rho) -> np.ndarray:
    """(<sx>, <sy>, <sz>) of a state or density matrix."""
    rho = state_or_rho.density() if isinstance(state_or_rho, QubitState) else np.asarray(state_or_rho)
    return np.real([np.trace(rho @ s) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)])


def is_hermitian(op, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(op, dtype=complex)
    return a.shape == (2, 2) and bool(np.max(np.abs(a - a.conj().T)) <= tol)


def require_hermitian(op, name: str = "operator") -> np.ndarray:
    a = np.asarray(op, dtype=complex)
    if a.shape != (2, 2):
        raise ValueError(f"{name} must be a 2x2 matrix, got shape {a.shape}")
    if not is_hermitian(a):
        raise ValueError(f"{name} is not Hermitian")
    return a


def expectation(op, state: QubitState) -> complex:
    v = state.vector
    return complex(np.vdot(v, np.asarray(op) @ v))


def internal_energy(state: QubitState, H) -> float:
    """<psi|H|psi> for a Hermitian H."""
    h = require_hermitian(H, "H")
    return float(expectation(h, state).real)


def validate_density(rho, tol: float = 1e-10) -> np.ndarray:
    r = np.asarray(rho, dtype=complex)
    if r.shape != (2, 2):
        raise ValueError("density matrix must be 2x2")
    if np.max(np.abs(r - r.conj().T)) > tol:
        raise ValueError("density matrix not Hermitian")
    if abs(np.trace(r).real - 1.0) > tol:
        raise ValueError(f"density matrix trace {np.trace(r).real!r} != 1")
    if np.min(np.linalg.eigvalsh(r)) < -tol:
        raise ValueError("density matrix has a negative eigenvalue")
    return r


def qubit_hamiltonian(omega_0: float) -> np.ndarray:
    """Bare qubit Hamiltonian omega_0 |e><e|."""
    return omega_0 * PROJ_E


@dataclass(frozen=True, slots=True)
class DressedBasis:
    theta: float
    plus_state: QubitState
    minus_state: QubitState
    eps_plus: float
    eps_minus: float
    rabi_freq: float

    @property
    def cos(self) -> float:
        return math.cos(self.theta)

    @property
    def sin(self) -> float:
        return math.sin(self.theta)

    def unitary(self) -> np.ndarray:
        """Columns are |+> and |-> in the (e, g) basis."""
        return np.column_stack([self.plus_state.vector, self.minus_state.vector])

    def sigma_minus(self) -> np.ndarray:
        """|-><+| in the (e, g) basis."""
        return np.outer(self.minus_state.vector, self.plus_state.vector.conj())

    def sigma_z(self) -> np.ndarray:
        return np.outer(self.plus_state.vector, self.plus_state.vector.conj()) - np.outer(
            self.minus_state.vector, self.minus_state.vector.conj()
        )


def dressed_basis(g: float, delta: float) -> DressedBasis:
    """Eigenbasis of (delta/2) sigma_z + (g/2) sigma_x.

    Uses cos^2(theta) = (Omega + delta) / (2 Omega), normalized so that the
    dressed states are unit vectors.
    """
    if g == 0.0 and delta == 0.0:
        raise ValueError("dressed basis undefined for g = delta = 0")
    omega = math.hypot(g, delta)
    theta = 0.5 * math.atan2(g, delta)
    c, s = math.cos(theta), math.sin(theta)
    plus = QubitState.from_vector([c, s])
    minus = QubitState.from_vector([-s, c])
    return DressedBasis(theta, plus, minus, omega / 2, -omega / 2, omega)


def thermal_occupation(omega: float, T: float) -> float:
    """Bose occupation 1/(e^{omega/T} - 1), zero at T = 0."""
    if not omega > 0:
        raise ValueError(f"frequency must be positive, got {omega!r}")
    if T < 0:
        raise ValueError(f"temperature must be nonnegative, got {T!r}")
    if T == 0:
        return 0.0
    return 1.0 / math.expm1(omega / T)


def thermal_excited_population(omega: float, T: float) -> float:
    """Equilibrium P_e of a qubit with splitting omega, n/(2n+1)."""
    if T == 0:
        return 0.0
    return 1.0 / (1.0 + math.exp(omega / T))


def shannon_entropy(p) -> np.ndarray | float:
    """Two-outcome Shannon entropy in nats, with 0 ln 0 = 0."""
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    for q in (p, 1.0 - p):
        m = q > 0
        out[m] -= q[m] * np.log(q[m])
    return float(out) if out.ndim == 0 else out


def von_neumann_entropy(rho) -> float:
    lam = np.linalg.eigvalsh(np.asarray(rho, dtype=complex))
    lam = lam[lam > 1e-300]
    return float(-np.sum(lam * np.log(lam)))


def free_energy(omega: float, T: float) -> float:
    """Equilibrium free energy -T ln(1 + e^{-omega/T}) of a qubit."""
    if T <= 0:
        return 0.0
    return -T * math.log1p(math.exp(-omega / T))
