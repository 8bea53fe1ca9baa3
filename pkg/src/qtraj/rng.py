"""Counter-based random streams keyed by (seed, trajectory, counter, purpose).

Every variate is a pure function of its key, so a trajectory's randomness does
not depend on how trajectories are batched or scheduled across threads.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_PURPOSE = np.uint64(0xD1B54A32D192ED03)


def _mix(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer on uint64 arrays (wrapping arithmetic)."""
    z = z ^ (z >> np.uint64(30))
    z = z * _M1
    z = z ^ (z >> np.uint64(27))
    z = z * _M2
    return z ^ (z >> np.uint64(31))


def derive(base_seed: int, index) -> np.ndarray:
    """Stream key for trajectory ``index`` (scalar or array) under ``base_seed``."""
    with np.errstate(over="ignore"):
        s = _mix(np.uint64(base_seed & 0xFFFFFFFFFFFFFFFF) + _GOLDEN)
        idx = np.asarray(index, dtype=np.uint64)
        return _mix(s ^ _mix(idx * _GOLDEN + np.uint64(1)))


def uniforms(keys: np.ndarray, counter: int, purpose: int = 0) -> np.ndarray:
    """Uniform variates in the open interval (0, 1), one per key."""
    with np.errstate(over="ignore"):
        c = np.uint64(counter & 0xFFFFFFFFFFFFFFFF) * _GOLDEN + np.uint64(purpose) * _PURPOSE
        z = _mix(_mix(keys ^ c) + np.uint64(purpose + 1))
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def normals(keys: np.ndarray, counter: int, purpose: int = 0) -> np.ndarray:
    """Standard normal variates by inverse-CDF transform of ``uniforms``."""
    return ndtri(uniforms(keys, counter, purpose))


def generator(base_seed: int, index: int = 0) -> np.random.Generator:
    """A numpy Generator seeded from the derived stream key, for scalar APIs."""
    return np.random.default_rng(int(derive(base_seed, index)))
