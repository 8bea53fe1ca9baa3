"""Quantum-trajectory thermodynamics of driven, dissipative qubits."""
from __future__ import annotations

__version__ = "0.1.0"

from .core import QubitState, bloch_state  # noqa: E402,F401
from .engine import build_model, run_qj  # noqa: E402,F401
from .ledger import EnergyLedger, FTEstimate  # noqa: E402,F401
from .protocols import ProtocolSpec, run_protocol  # noqa: E402,F401
