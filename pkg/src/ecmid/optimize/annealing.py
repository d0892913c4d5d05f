"""Single-chain simulated annealing with geometric cooling."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import DomainError
from .common import Evaluator, central_jacobian, low_identifiability, stream
from .problem import FitProblem, FitReport, finalize_theta


@dataclass(frozen=True)
class SaConfig:
    t0: float = 1e-5  # initial temperature, volt^2
    cooling: float = 0.997
    iterations: int = 3000
    step_scale: float = 0.05  # proposal std-dev as a fraction of box width
    x0: Optional[Sequence[float]] = None  # random start when None

    def __post_init__(self):
        if self.t0 < 0 or self.step_scale < 0 or self.iterations < 0:
            raise DomainError("t0, step_scale and iterations must be non-negative")
        if not 0.0 < self.cooling <= 1.0:
            raise DomainError("cooling factor must lie in (0, 1]")


def fit_simulated_annealing(
    problem: FitProblem, config: SaConfig = SaConfig(), seed: int = 42, workers: int = 1
) -> FitReport:
    space = problem.space
    d = space.dim
    rng = stream(seed, "sa")
    with Evaluator(problem, workers) as ev:
        start = time.perf_counter()
        if config.x0 is None:
            x = rng.random(d)
        else:
            x = np.clip(space.to_unit(config.x0), 0.0, 1.0)
        fx = float(ev.mse([space.to_theta(x)])[0])
        best, best_f = x.copy(), fx
        trace = [best_f]
        chain = [fx]
        temp = config.t0
        for _ in range(config.iterations):
            step = rng.normal(0.0, 1.0, d) * config.step_scale
            cand = np.clip(x + step, 0.0, 1.0)
            fc = float(ev.mse([space.to_theta(cand)])[0])
            delta = fc - fx
            u = rng.random()
            if delta <= 0 or (temp > 0 and u < math.exp(-delta / temp)):
                x, fx = cand, fc
                if fx < best_f:
                    best, best_f = x.copy(), fx
            trace.append(best_f)
            chain.append(fx)
            temp *= config.cooling
        degenerate = low_identifiability(central_jacobian(ev, best.copy(), 1e-6))
        theta = finalize_theta(space.to_theta(best), space)
        elapsed = time.perf_counter() - start
        evaluations = ev.count
    return FitReport(
        method="sa",
        theta=tuple(float(t) for t in theta),
        mse=best_f,
        execution_time=elapsed,
        iterations=config.iterations,
        evaluations=evaluations,
        trace=tuple(trace),
        seed=int(seed),
        converged=True,
        low_identifiability=degenerate,
        message="budget exhausted" + ("; low identifiability" if degenerate else ""),
        chain=tuple(chain),
    )
