"""Exhaustive grid search, used as an independent reference minimum."""

from __future__ import annotations

import itertools

import numpy as np

from ..errors import DomainError
from .common import Evaluator
from .problem import FitProblem


def grid_oracle(problem: FitProblem, points_per_dim: int = 6, workers: int = 1) -> tuple[np.ndarray, float]:
    """Minimum of the MSE over a log-spaced grid spanning the search box.

    Candidates are visited in lexicographic order and the first minimum
    wins, so ties resolve lexicographically.
    """
    if points_per_dim < 2:
        raise DomainError("points_per_dim must be at least 2")
    if problem.space.dim != 5:
        raise DomainError("grid oracle only supports the 5-dimensional fixed-OCV problem")
    space = problem.space
    axes = [space.to_theta(np.full(5, u)) for u in np.linspace(0.0, 1.0, points_per_dim)]
    # axes[k][j] is the k-th grid value along parameter j.
    values = [[float(axes[k][j]) for k in range(points_per_dim)] for j in range(5)]
    candidates = [np.array(c) for c in itertools.product(*values)]
    with Evaluator(problem, workers) as ev:
        mse = ev.mse(candidates)
    best = int(np.argmin(mse))
    return candidates[best], float(mse[best])
