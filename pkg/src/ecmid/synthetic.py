"""Synthetic cells with known parameters, for self-tests and demos."""

from __future__ import annotations

import numpy as np

from .dataset import DischargeSegment
from .model import CellSpec, EcmParams, OcvCurve, simulate_terminal_voltage

THETA_STAR = EcmParams(r0=0.05, r1=0.02, c1=1000.0, r2=0.03, c2=20000.0)

# Degree-5 least-squares fit of a typical NMC/graphite OCV table, 3.0-4.19 V.
REFERENCE_OCV = OcvCurve((3.0059, 6.4427, -27.2839, 55.8355, -51.9158, 18.109))

SYNTHETIC_CELL = CellSpec(capacity=2.0, soc_init=1.0)


def constant_current_profile(duration=300.0, dt=1.0, current=1.0):
    time = np.arange(int(round(duration / dt)) + 1) * dt
    return time, np.full(len(time), float(current))


def pulse_profile(duration=300.0, dt=1.0, high=2.0, low=0.5, period=60.0):
    """Square-wave discharge between ``low`` and ``high`` amperes."""
    time = np.arange(int(round(duration / dt)) + 1) * dt
    phase = (time % period) < period / 2
    return time, np.where(phase, high, low).astype(float)


def synthetic_segment(
    params: EcmParams = THETA_STAR,
    ocv: OcvCurve = REFERENCE_OCV,
    cell: CellSpec = SYNTHETIC_CELL,
    profile=None,
    noise_std: float = 0.0,
    seed: int = 0,
    cell_id: str = "synthetic",
    cycle_index: int = 1,
) -> DischargeSegment:
    """Simulate a discharge segment, optionally with Gaussian voltage noise."""
    time, current = profile if profile is not None else constant_current_profile()
    voltage = simulate_terminal_voltage(params, ocv, cell, time, current).voltage
    if noise_std > 0:
        voltage = voltage + np.random.default_rng(seed).normal(0.0, noise_std, len(voltage))
    return DischargeSegment(
        cell_id=cell_id,
        cycle_index=cycle_index,
        time=time,
        current=current,
        voltage=voltage,
        soc_start=cell.soc_init,
        capacity=cell.capacity,
        source="synthetic",
    )
