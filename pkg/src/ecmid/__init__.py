"""Parameter identification for 2RC equivalent circuit models of Li-ion cells."""

from .dataset import DischargeSegment, RawRecord, WindowPolicy
from .model import CellSpec, EcmParams, OcvCurve, SimulationState, simulate_terminal_voltage

__version__ = "0.1.0"

__all__ = [
    "CellSpec",
    "DischargeSegment",
    "EcmParams",
    "OcvCurve",
    "RawRecord",
    "SimulationState",
    "WindowPolicy",
    "simulate_terminal_voltage",
]
