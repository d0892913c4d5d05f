"""Shared machinery for the optimizers: candidate evaluation and RNG streams."""

from __future__ import annotations

import zlib
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

import numpy as np

from .problem import FitProblem, objective_mse

_WORKER_PROBLEM: Optional[FitProblem] = None


def _init_worker(problem):
    global _WORKER_PROBLEM
    _WORKER_PROBLEM = problem


def _worker_mse(theta):
    return objective_mse(theta, _WORKER_PROBLEM)


def _worker_residuals(theta):
    return _WORKER_PROBLEM.residuals(theta)


class Evaluator:
    """Evaluates batches of candidates, optionally on a process pool.

    Results always come back in candidate order, so reductions over them
    do not depend on scheduling.
    """

    def __init__(self, problem: FitProblem, workers: int = 1):
        self.problem = problem
        self.workers = max(1, int(workers))
        self.count = 0
        self._pool = None
        if self.workers > 1:
            self._pool = ProcessPoolExecutor(
                max_workers=self.workers, initializer=_init_worker, initargs=(problem,)
            )

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def _map(self, fn, local, thetas):
        thetas = [np.asarray(t, dtype=float) for t in thetas]
        self.count += len(thetas)
        if self._pool is None or len(thetas) < 2:
            return [local(t) for t in thetas]
        chunk = max(1, len(thetas) // (4 * self.workers))
        return list(self._pool.map(fn, thetas, chunksize=chunk))

    def mse(self, thetas: Sequence) -> np.ndarray:
        return np.array(self._map(_worker_mse, lambda t: objective_mse(t, self.problem), thetas))

    def residuals(self, thetas: Sequence) -> list[np.ndarray]:
        return self._map(_worker_residuals, self.problem.residuals, thetas)


def stream(seed: int, tag: str, index: int = 0) -> np.random.Generator:
    """Counter-based generator for one particle/individual/chain.

    Streams are keyed by (seed, method tag, index), so the draws of one
    candidate never depend on how many others exist or who evaluates them.
    """
    key = (zlib.crc32(tag.encode()), int(index))
    seq = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))


def central_jacobian(evaluator: Evaluator, z: np.ndarray, step: float) -> np.ndarray:
    """Central-difference Jacobian of the residual vector w.r.t. unit coordinates."""
    space = evaluator.problem.space
    probes = []
    for j in range(len(z)):
        for sign in (1.0, -1.0):
            zp = z.copy()
            zp[j] += sign * step
            probes.append(space.to_theta(zp, clamp=False))
    res = evaluator.residuals(probes)
    cols = [(res[2 * j] - res[2 * j + 1]) / (2.0 * step) for j in range(len(z))]
    return np.column_stack(cols)


def low_identifiability(jac: np.ndarray) -> bool:
    """True when the residual Jacobian is numerically rank deficient."""
    if not np.any(jac):
        return True
    return int(np.linalg.matrix_rank(jac)) < jac.shape[1]
