"""Real-valued genetic algorithm: tournament selection, blend crossover, elitism."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DomainError
from .common import Evaluator, central_jacobian, low_identifiability, stream
from .problem import FitProblem, FitReport, finalize_theta


@dataclass(frozen=True)
class GaConfig:
    population: int = 40
    generations: int = 100
    mutation_rate: float = 0.2  # per gene
    mutation_scale: float = 0.05  # std-dev as a fraction of box width
    tournament: int = 2

    def __post_init__(self):
        if self.population < 4:
            raise DomainError("population must be at least 4")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise DomainError("mutation_rate must lie in [0, 1]")
        if self.mutation_scale < 0 or self.generations < 0 or self.tournament < 1:
            raise DomainError("mutation_scale, generations and tournament size out of range")


def _tournament(rng, fitness, k):
    picks = rng.integers(len(fitness), size=k)
    # Lowest MSE wins; ties go to the lower index.
    return min(picks, key=lambda i: (fitness[i], i))


def fit_genetic(
    problem: FitProblem,
    config: GaConfig = GaConfig(),
    seed: int = 42,
    workers: int = 1,
    initial_population: Optional[np.ndarray] = None,
) -> FitReport:
    """Run the GA.  ``initial_population`` is given in parameter units."""
    space = problem.space
    d = space.dim
    n = config.population
    rngs = [stream(seed, "ga", i) for i in range(n)]
    with Evaluator(problem, workers) as ev:
        start = time.perf_counter()
        if initial_population is None:
            pop = np.array([rng.random(d) for rng in rngs])
        else:
            pop = np.clip(np.array([space.to_unit(p) for p in initial_population]), 0.0, 1.0)
            if pop.shape != (n, d):
                raise DomainError(f"initial population must have shape ({n}, {d})")
        fit = ev.mse([space.to_theta(p) for p in pop])
        e = int(np.argmin(fit))
        best, best_f = pop[e].copy(), float(fit[e])
        trace = [best_f]
        for _ in range(config.generations):
            children = np.empty_like(pop)
            children[0] = pop[e]
            for j in range(1, n):
                rng = rngs[j]
                p1 = pop[_tournament(rng, fit, config.tournament)]
                p2 = pop[_tournament(rng, fit, config.tournament)]
                beta = rng.random()
                child = p2 + beta * (p1 - p2)
                mask = rng.random(d) < config.mutation_rate
                noise = rng.normal(0.0, config.mutation_scale, d)
                child = np.where(mask, child + noise, child)
                children[j] = np.clip(child, 0.0, 1.0)
            child_fit = np.empty(n)
            child_fit[0] = fit[e]
            child_fit[1:] = ev.mse([space.to_theta(c) for c in children[1:]])
            pop, fit = children, child_fit
            e = int(np.argmin(fit))
            if fit[e] < best_f:
                best, best_f = pop[e].copy(), float(fit[e])
            trace.append(best_f)
        degenerate = low_identifiability(central_jacobian(ev, best.copy(), 1e-6))
        theta = finalize_theta(space.to_theta(best), space)
        elapsed = time.perf_counter() - start
        evaluations = ev.count
    return FitReport(
        method="ga",
        theta=tuple(float(t) for t in theta),
        mse=best_f,
        execution_time=elapsed,
        iterations=config.generations,
        evaluations=evaluations,
        trace=tuple(trace),
        seed=int(seed),
        converged=True,
        low_identifiability=degenerate,
        message="budget exhausted" + ("; low identifiability" if degenerate else ""),
    )
