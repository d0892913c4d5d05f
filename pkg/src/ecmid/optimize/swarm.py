"""Global-best particle swarm optimization."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from .common import Evaluator, central_jacobian, low_identifiability, stream
from .problem import FitProblem, FitReport, finalize_theta


@dataclass(frozen=True)
class PsoConfig:
    swarm_size: int = 30
    inertia: float = 0.729
    cognitive: float = 1.49445
    social: float = 1.49445
    max_iterations: int = 100
    velocity_clamp: float = 0.5  # fraction of box width

    def __post_init__(self):
        if self.swarm_size < 1:
            raise DomainError("swarm_size must be at least 1")
        if not 0.0 <= self.inertia < 1.0:
            raise DomainError("inertia must lie in [0, 1)")
        if self.cognitive < 0 or self.social < 0:
            raise DomainError("cognitive and social coefficients must be non-negative")
        if self.max_iterations < 0 or self.velocity_clamp <= 0:
            raise DomainError("max_iterations must be >= 0 and velocity_clamp > 0")


def fit_pso(problem: FitProblem, config: PsoConfig = PsoConfig(), seed: int = 42, workers: int = 1) -> FitReport:
    space = problem.space
    d = space.dim
    n = config.swarm_size
    rngs = [stream(seed, "pso", i) for i in range(n)]
    with Evaluator(problem, workers) as ev:
        start = time.perf_counter()
        # Uniform in unit coordinates is log-uniform on the log-scaled axes.
        x = np.array([rng.random(d) for rng in rngs])
        v = np.zeros((n, d))
        f = ev.mse([space.to_theta(p) for p in x])
        pbest, pbest_f = x.copy(), f.copy()
        g = int(np.argmin(pbest_f))
        trace = [float(pbest_f[g])]
        vmax = config.velocity_clamp
        for _ in range(config.max_iterations):
            gbest = pbest[g]
            for i, rng in enumerate(rngs):
                u1 = rng.random(d)
                u2 = rng.random(d)
                v[i] = (
                    config.inertia * v[i]
                    + config.cognitive * u1 * (pbest[i] - x[i])
                    + config.social * u2 * (gbest - x[i])
                )
            np.clip(v, -vmax, vmax, out=v)
            x = np.clip(x + v, 0.0, 1.0)
            f = ev.mse([space.to_theta(p) for p in x])
            better = f < pbest_f
            pbest[better] = x[better]
            pbest_f[better] = f[better]
            g = int(np.argmin(pbest_f))
            trace.append(float(pbest_f[g]))
        degenerate = low_identifiability(central_jacobian(ev, pbest[g].copy(), 1e-6))
        theta = finalize_theta(space.to_theta(pbest[g]), space)
        elapsed = time.perf_counter() - start
        evaluations = ev.count
    return FitReport(
        method="pso",
        theta=tuple(float(t) for t in theta),
        mse=float(pbest_f[g]),
        execution_time=elapsed,
        iterations=config.max_iterations,
        evaluations=evaluations,
        trace=tuple(trace),
        seed=int(seed),
        converged=True,
        low_identifiability=degenerate,
        message="budget exhausted" + ("; low identifiability" if degenerate else ""),
    )
