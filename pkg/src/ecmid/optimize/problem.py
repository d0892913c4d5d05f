"""Identification problem: search box, objective, and the fit report."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from ..dataset import DischargeSegment
from ..errors import DomainError
from ..model import (
    CellSpec,
    EcmParams,
    OcvCurve,
    branch_response,
    ocv_eval,
    soc_trajectory,
    uniform_step,
)

CIRCUIT_NAMES = ("r0", "r1", "c1", "r2", "c2")
DEFAULT_OCV_DEGREE = 5

DEFAULT_BOUNDS = {
    "r0": (1e-4, 1.0),
    "r1": (1e-4, 1.0),
    "c1": (10.0, 1e4),
    "r2": (1e-4, 1.0),
    "c2": (1e2, 1e6),
}


@dataclass(frozen=True)
class SearchSpace:
    """Per-parameter box.  Log-scaled axes are searched in log space."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    log_scale: tuple[bool, ...] = ()
    names: tuple[str, ...] = ()

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if len(lo) != len(hi):
            raise DomainError("lower and upper bounds differ in length")
        if len(lo) < 5:
            raise DomainError("search space needs at least the 5 circuit parameters")
        if not self.log_scale:
            object.__setattr__(self, "log_scale", (True,) * 5 + (False,) * (len(lo) - 5))
        if not self.names:
            extra = tuple(f"ocv{k}" for k in range(len(lo) - 5))
            object.__setattr__(self, "names", CIRCUIT_NAMES + extra)
        if len(self.log_scale) != len(lo) or len(self.names) != len(lo):
            raise DomainError("log_scale/names length does not match bounds")
        for name, a, b in zip(self.names, lo, hi):
            if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
                raise DomainError(f"bounds for {name} must satisfy lower < upper, got [{a}, {b}]")
        for k in range(5):
            if lo[k] <= 0:
                raise DomainError(f"lower bound of {self.names[k]} must be positive")
        for k, flag in enumerate(self.log_scale):
            if flag and lo[k] <= 0:
                raise DomainError(f"log-scaled axis {self.names[k]} needs a positive lower bound")

    @classmethod
    def default(cls, overrides: Optional[dict] = None) -> "SearchSpace":
        bounds = dict(DEFAULT_BOUNDS)
        bounds.update(overrides or {})
        return cls(
            tuple(bounds[n][0] for n in CIRCUIT_NAMES),
            tuple(bounds[n][1] for n in CIRCUIT_NAMES),
        )

    @property
    def dim(self) -> int:
        return len(self.lower)

    @cached_property
    def _axes(self):
        lo = np.array(self.lower)
        hi = np.array(self.upper)
        logm = np.array(self.log_scale)
        a = np.where(logm, np.log(np.where(logm, lo, 1.0)), lo)
        b = np.where(logm, np.log(np.where(logm, hi, 1.0)), hi)
        return lo, hi, logm, a, b - a

    def to_theta(self, z, clamp: bool = True) -> np.ndarray:
        """Map unit-cube coordinates to parameter values."""
        lo, hi, logm, a, width = self._axes
        u = a + np.asarray(z, dtype=float) * width
        theta = u.copy()
        theta[logm] = np.exp(u[logm])
        if clamp:
            # Box faces map exactly onto the bounds despite exp/log rounding.
            z = np.asarray(z, dtype=float)
            theta = np.where(z <= 0.0, lo, np.where(z >= 1.0, hi, np.minimum(np.maximum(theta, lo), hi)))
        return theta

    def to_unit(self, theta) -> np.ndarray:
        lo, hi, logm, a, width = self._axes
        t = np.asarray(theta, dtype=float)
        u = np.where(logm, np.log(np.where(logm, t, 1.0)), t)
        return (u - a) / width

    def theta_jacobian(self, z) -> np.ndarray:
        """Diagonal of d(theta)/d(z) at unit coordinates ``z``."""
        _, _, logm, _, width = self._axes
        theta = self.to_theta(z, clamp=False)
        return np.where(logm, theta * width, width)

    def contains(self, theta) -> bool:
        t = np.asarray(theta, dtype=float)
        return bool(np.all(t >= np.array(self.lower)) and np.all(t <= np.array(self.upper)))

    def center(self) -> np.ndarray:
        return self.to_theta(np.full(self.dim, 0.5))


@dataclass(frozen=True, eq=False)
class FitProblem:
    """Objective context: one discharge segment plus the model setup.

    With ``ocv`` given the search is over the 5 circuit parameters; without
    it the OCV polynomial coefficients are appended to the search vector.
    """

    segment: DischargeSegment
    cell: CellSpec
    space: SearchSpace
    ocv: Optional[OcvCurve] = None

    def __post_init__(self):
        expected = 5 if self.ocv is not None else None
        if expected is not None and self.space.dim != expected:
            raise DomainError(f"fixed-OCV problems are 5-dimensional, search space has {self.space.dim}")
        if self.ocv is None and self.space.dim < 6:
            raise DomainError("joint OCV identification needs at least one polynomial coefficient")

    @classmethod
    def build(
        cls,
        segment: DischargeSegment,
        cell: Optional[CellSpec] = None,
        ocv: Optional[OcvCurve] = None,
        space: Optional[SearchSpace] = None,
        ocv_degree: int = DEFAULT_OCV_DEGREE,
    ) -> "FitProblem":
        """Assemble a problem with default bounds for whichever OCV mode applies."""
        if cell is None:
            cell = CellSpec(segment.capacity, segment.soc_start)
        if space is None:
            space = SearchSpace.default()
        if ocv is None and space.dim == 5:
            space = joint_space(space, segment, cell, ocv_degree)
        return cls(segment, cell, space, ocv)

    @property
    def joint(self) -> bool:
        return self.ocv is None

    @property
    def n_samples(self) -> int:
        return len(self.segment.time)

    @cached_property
    def _cache(self):
        seg = self.segment
        t = np.asarray(seg.time, dtype=float)
        current = np.asarray(seg.current, dtype=float)
        dt = np.concatenate(([0.0], np.diff(t)))
        soc = soc_trajectory(t, current.tolist(), self.cell)
        ocv = None if self.ocv is None else ocv_eval(self.ocv, soc)
        return dt, current, uniform_step(dt), soc, ocv, np.asarray(seg.voltage, dtype=float)

    @property
    def soc(self) -> np.ndarray:
        return self._cache[3]

    @property
    def measured(self) -> np.ndarray:
        return self._cache[5]

    def predict(self, theta) -> np.ndarray:
        """Simulated terminal voltage for parameter vector ``theta``."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.space.dim,):
            raise DomainError(f"theta has shape {theta.shape}, problem expects ({self.space.dim},)")
        dt, current, step, soc, ocv, _ = self._cache
        r0, r1, c1, r2, c2 = (float(v) for v in theta[:5])
        if ocv is None:
            ocv = np.polynomial.polynomial.polyval(soc, theta[5:])
        v1 = branch_response(dt, current, r1, c1, step)
        v2 = branch_response(dt, current, r2, c2, step)
        return ocv - (v1 + v2) - current * r0

    def residuals(self, theta) -> np.ndarray:
        return self.predict(theta) - self.measured


def objective_mse(theta, problem: FitProblem) -> float:
    """Mean squared terminal-voltage error of ``theta`` on ``problem``."""
    r = problem.residuals(theta)
    return float(np.mean(r * r))


def canonicalize(theta: Sequence[float]) -> np.ndarray:
    """Order the RC branches so the first has the smaller time constant."""
    out = np.array(theta, dtype=float)
    if out.shape[0] < 5:
        raise DomainError("theta needs at least 5 entries")
    if out[1] * out[2] > out[3] * out[4]:
        out[[1, 2, 3, 4]] = out[[3, 4, 1, 2]]
    return out


def finalize_theta(theta, space: SearchSpace) -> np.ndarray:
    """Canonicalize unless the swapped branches would leave the box."""
    swapped = canonicalize(theta)
    return swapped if space.contains(swapped) else np.array(theta, dtype=float)


def joint_space(base: SearchSpace, segment: DischargeSegment, cell: CellSpec, degree: int) -> SearchSpace:
    """Extend a circuit-only box with bounds for OCV polynomial coefficients.

    A short window spans little SOC, so a full-degree fit to it is wildly
    conditioned.  The box is instead centred on a straight-line fit of the
    measured voltage (raised by the mid-box ohmic drop) against SOC, with
    +-0.5 V on the constant term and +-1 V per SOC^n on the others.
    """
    soc = soc_trajectory(segment.time, list(segment.current), cell)
    r0_mid = math.sqrt(base.lower[0] * base.upper[0])
    lifted = np.asarray(segment.voltage) + np.asarray(segment.current) * r0_mid
    deg = min(1, degree, len(np.unique(soc)) - 1)
    line = np.polynomial.polynomial.polyfit(soc, lifted, deg) if deg > 0 else np.array([lifted.mean()])
    center = np.zeros(degree + 1)
    center[: len(line)] = line
    half = np.ones(degree + 1)
    half[0] = 0.5
    if degree >= 1:
        half[1] = max(1.0, 2.0 * abs(center[1]))
    lower = base.lower[:5] + tuple(float(c - h) for c, h in zip(center, half))
    upper = base.upper[:5] + tuple(float(c + h) for c, h in zip(center, half))
    return SearchSpace(lower, upper)


@dataclass
class FitReport:
    method: str
    theta: tuple[float, ...]
    mse: float
    execution_time: float
    iterations: int
    evaluations: int
    trace: tuple[float, ...]
    seed: int
    converged: bool = True
    low_identifiability: bool = False
    message: str = ""
    chain: tuple[float, ...] = field(default=(), repr=False)

    @property
    def best_params(self) -> EcmParams:
        return EcmParams.from_sequence(self.theta)

    @property
    def ocv_coefficients(self) -> Optional[tuple[float, ...]]:
        return tuple(self.theta[5:]) or None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["theta"] = list(self.theta)
        d["trace"] = list(self.trace)
        d["chain"] = list(self.chain)
        d["best_params"] = dict(zip(CIRCUIT_NAMES, self.theta[:5]))
        if self.ocv_coefficients:
            d["ocv_coefficients"] = list(self.ocv_coefficients)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FitReport":
        keep = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        for key in ("theta", "trace", "chain"):
            keep[key] = tuple(float(v) for v in keep.get(key, ()))
        return cls(**keep)


def make_ocv_curve(problem: FitProblem, theta) -> OcvCurve:
    """The OCV curve implied by ``theta`` (the fixed one in fixed-OCV mode)."""
    if problem.ocv is not None:
        return problem.ocv
    soc = problem.soc
    return OcvCurve(tuple(float(c) for c in theta[5:]), (float(soc.min()), float(soc.max())))
