"""Second-order (2RC) equivalent circuit model of a lithium-ion cell.

Terminal voltage at sample k::

    V[k] = OCV(SOC[k]) - V1[k] - V2[k] - I[k] * R0

The two RC branches are advanced with a zero-order hold on the current,
SOC is tracked by coulomb counting.  Discharge current is positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.signal import lfilter

from .errors import DomainError, RankDeficiencyError

# Plausibility band for a single Li-ion cell's open-circuit voltage.
OCV_ENVELOPE = (0.5, 6.0)
_ENVELOPE_SAMPLES = 201


def _finite(*values):
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class EcmParams:
    """Series resistance plus two RC branches (ohm, farad)."""

    r0: float
    r1: float
    c1: float
    r2: float
    c2: float

    def __post_init__(self):
        for name in ("r0", "r1", "c1", "r2", "c2"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
                raise DomainError(f"{name} must be positive and finite, got {value!r}")

    @property
    def tau1(self) -> float:
        return self.r1 * self.c1

    @property
    def tau2(self) -> float:
        return self.r2 * self.c2

    @property
    def is_canonical(self) -> bool:
        return self.tau1 <= self.tau2

    def swapped(self) -> "EcmParams":
        return EcmParams(self.r0, self.r2, self.c2, self.r1, self.c1)

    def canonical(self) -> "EcmParams":
        return self if self.is_canonical else self.swapped()

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.r0, self.r1, self.c1, self.r2, self.c2)

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "EcmParams":
        if len(values) < 5:
            raise DomainError(f"need 5 circuit parameters, got {len(values)}")
        return cls(*(float(v) for v in values[:5]))


@dataclass(frozen=True)
class OcvCurve:
    """Open-circuit voltage as a polynomial in SOC, lowest degree first."""

    coefficients: tuple[float, ...]
    valid_range: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        lo, hi = (float(v) for v in self.valid_range)
        object.__setattr__(self, "valid_range", (lo, hi))
        if not coeffs:
            raise DomainError("OCV curve needs at least one coefficient")
        if not _finite(*coeffs):
            raise DomainError("OCV coefficients must be finite")
        if not (0.0 <= lo <= hi <= 1.0):
            raise DomainError(f"valid_range must lie within [0, 1], got {self.valid_range}")
        grid = np.linspace(lo, hi, _ENVELOPE_SAMPLES)
        values = np.polynomial.polynomial.polyval(grid, coeffs)
        if not np.all((values >= OCV_ENVELOPE[0]) & (values <= OCV_ENVELOPE[1])):
            raise DomainError(
                f"OCV curve leaves the {OCV_ENVELOPE[0]}-{OCV_ENVELOPE[1]} V envelope "
                f"(range {values.min():.4g}..{values.max():.4g} V)"
            )

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, soc):
        return ocv_eval(self, soc)


@dataclass(frozen=True)
class CellSpec:
    capacity: float  # ampere-hour
    soc_init: float = 1.0

    def __post_init__(self):
        if not _finite(self.capacity) or self.capacity <= 0:
            raise DomainError(f"capacity must be positive, got {self.capacity!r}")
        if not _finite(self.soc_init) or not 0.0 <= self.soc_init <= 1.0:
            raise DomainError(f"soc_init must be in [0, 1], got {self.soc_init!r}")


@dataclass(frozen=True)
class SimulationState:
    v1: float
    v2: float
    soc: float


@dataclass(frozen=True)
class Simulation:
    """Per-sample output of :func:`simulate_terminal_voltage`."""

    voltage: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    soc: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.voltage)

    @property
    def states(self) -> list[SimulationState]:
        return [
            SimulationState(float(a), float(b), float(s))
            for a, b, s in zip(self.v1, self.v2, self.soc)
        ]


def branch_decay_factor(r: float, c: float, dt: float) -> float:
    """Return ``exp(-dt / (r*c))``, the per-step decay of an RC branch."""
    if not _finite(r, c, dt):
        raise DomainError("r, c and dt must be finite")
    if r <= 0 or c <= 0:
        raise DomainError(f"r and c must be positive, got r={r!r}, c={c!r}")
    if dt < 0:
        raise DomainError(f"dt must be non-negative, got {dt!r}")
    return math.exp(-dt / (r * c))


def step_branch(v_prev: float, i: float, r: float, c: float, dt: float) -> float:
    """Advance one RC branch by ``dt`` seconds under constant current ``i``."""
    if not _finite(v_prev, i):
        raise DomainError("v_prev and i must be finite")
    alpha = branch_decay_factor(r, c, dt)
    return alpha * v_prev + r * (1.0 - alpha) * i


def coulomb_count(soc_prev: float, i: float, dt: float, capacity: float) -> float:
    if not _finite(soc_prev, i, dt, capacity):
        raise DomainError("coulomb_count inputs must be finite")
    if capacity <= 0:
        raise DomainError(f"capacity must be positive, got {capacity!r}")
    if dt < 0:
        raise DomainError(f"dt must be non-negative, got {dt!r}")
    if not 0.0 <= soc_prev <= 1.0:
        raise DomainError(f"soc_prev must be in [0, 1], got {soc_prev!r}")
    return min(1.0, max(0.0, soc_prev - i * dt / (3600.0 * capacity)))


def ocv_eval(curve: OcvCurve, soc):
    """Evaluate the curve at ``soc`` clamped into its valid range.

    Accepts a scalar or an array; returns the same kind.
    """
    lo, hi = curve.valid_range
    clamped = np.clip(soc, lo, hi)
    out = np.polynomial.polynomial.polyval(clamped, curve.coefficients)
    if np.ndim(out) == 0:
        return float(out)
    return out


def fit_ocv(points, degree: int, valid_range=None) -> OcvCurve:
    """Least-squares polynomial fit of ``(soc, voltage)`` pairs.

    The valid range defaults to the span of the supplied SOC values.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError("points must be a sequence of (soc, voltage) pairs")
    if degree < 0:
        raise DomainError(f"degree must be non-negative, got {degree}")
    soc, volts = pts[:, 0], pts[:, 1]
    if not np.all(np.isfinite(pts)):
        raise DomainError("points must be finite")
    if len(np.unique(soc)) < degree + 1:
        raise RankDeficiencyError(
            f"degree {degree} needs at least {degree + 1} distinct SOC values, "
            f"got {len(np.unique(soc))}"
        )
    vander = np.polynomial.polynomial.polyvander(soc, degree)
    coeffs, _, rank, _ = np.linalg.lstsq(vander, volts, rcond=None)
    if rank < degree + 1:
        raise RankDeficiencyError(f"design matrix has rank {rank} < {degree + 1}")
    if valid_range is None:
        valid_range = (max(0.0, float(soc.min())), min(1.0, float(soc.max())))
    return OcvCurve(tuple(float(c) for c in coeffs), valid_range)


def soc_trajectory(time, current, cell: CellSpec) -> np.ndarray:
    """SOC at each sample by coulomb counting from ``cell.soc_init``."""
    soc = np.empty(len(time))
    s = cell.soc_init
    soc[0] = s
    for k in range(1, len(time)):
        s = coulomb_count(s, current[k], time[k] - time[k - 1], cell.capacity)
        soc[k] = s
    return soc


def uniform_step(dt: np.ndarray) -> Optional[float]:
    """The common sampling interval of ``dt[1:]``, or None if irregular."""
    if len(dt) > 1 and np.all(dt[1:] == dt[1]):
        return float(dt[1])
    return None


def branch_response(dt: np.ndarray, current: np.ndarray, r: float, c: float, step: Optional[float] = None) -> np.ndarray:
    """Polarization voltage of one RC branch, starting from rest.

    ``dt[k]`` is the interval ending at sample k (``dt[0]`` is ignored).
    Pass ``step`` when the grid is uniform to use a linear filter instead
    of the per-sample loop.
    """
    tau = r * c
    if step is not None:
        alpha = math.exp(-step / tau)
        drive = np.array(current, dtype=float)
        drive[0] = 0.0
        return lfilter([r * (1.0 - alpha)], [1.0, -alpha], drive)
    v = 0.0
    out = [0.0]
    exp = math.exp
    cur = current.tolist() if isinstance(current, np.ndarray) else current
    dts = dt.tolist() if isinstance(dt, np.ndarray) else dt
    for k in range(1, len(cur)):
        alpha = exp(-dts[k] / tau)
        v = alpha * v + r * (1.0 - alpha) * cur[k]
        out.append(v)
    return np.array(out)


def check_profile(time, current) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(time, dtype=float)
    i = np.asarray(current, dtype=float)
    if t.ndim != 1 or i.ndim != 1:
        raise DomainError("time and current must be one-dimensional")
    if len(t) != len(i):
        raise DomainError(f"length mismatch: {len(t)} timestamps, {len(i)} currents")
    if len(t) < 2:
        raise DomainError("profile needs at least 2 samples")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(i))):
        raise DomainError("profile contains non-finite samples")
    if np.any(np.diff(t) <= 0):
        bad = int(np.argmax(np.diff(t) <= 0)) + 1
        raise DomainError(f"timestamps must be strictly increasing (sample {bad})")
    return t, i


def simulate_terminal_voltage(
    params: EcmParams, ocv: OcvCurve, cell: CellSpec, time, current
) -> Simulation:
    t, i = check_profile(time, current)
    dt = np.concatenate(([0.0], np.diff(t)))
    step = uniform_step(dt)
    soc = soc_trajectory(t, i.tolist(), cell)
    v1 = branch_response(dt, i, params.r1, params.c1, step)
    v2 = branch_response(dt, i, params.r2, params.c2, step)
    # (v1 + v2) is summed first so swapping the branches is bit-exact.
    voltage = ocv_eval(ocv, soc) - (v1 + v2) - i * params.r0
    return Simulation(voltage=voltage, v1=v1, v2=v2, soc=soc)


def read_ocv_file(path) -> OcvCurve:
    """Parse an OCV file: one coefficient per line, lowest degree first.

    An optional ``# ocv degree=<n> [range=<lo>,<hi>]`` header is checked
    against the coefficient count.
    """
    coeffs = []
    declared = None
    valid_range = (0.0, 1.0)
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if body.startswith("ocv"):
                for token in body.split()[1:]:
                    key, _, value = token.partition("=")
                    if key == "degree":
                        declared = int(value)
                    elif key == "range":
                        lo, hi = value.split(",")
                        valid_range = (float(lo), float(hi))
            continue
        coeffs.append(float(line))
    if declared is not None and declared != len(coeffs) - 1:
        raise DomainError(f"header declares degree {declared} but file has {len(coeffs)} coefficients")
    return OcvCurve(tuple(coeffs), valid_range)


def write_ocv_file(curve: OcvCurve, path) -> None:
    lo, hi = curve.valid_range
    lines = [f"# ocv degree={curve.degree} range={lo!r},{hi!r}"]
    lines += [repr(c) for c in curve.coefficients]
    Path(path).write_text("\n".join(lines) + "\n")
