"""Levenberg-Marquardt on the terminal-voltage residual vector."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .common import Evaluator, central_jacobian, low_identifiability
from .problem import FitProblem, FitReport, finalize_theta


@dataclass(frozen=True)
class LsConfig:
    max_iterations: int = 200
    gradient_tol: float = 1e-10
    step_tol: float = 1e-12
    damping: float = 1e-3
    fd_step: float = 1e-6
    x0: Optional[Sequence[float]] = None  # box centre (in search coordinates) when None


_MAX_DAMPING = 1e16


def _gradient(jac, res):
    return 2.0 / len(res) * (jac.T @ res)


def _solve(a, b):
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(a, b, rcond=None)[0]


def _damped_step(jtj, diag, rhs, lam, z):
    """LM step; coordinates pinned at a bound and pushing outward are frozen."""
    a = jtj + lam * np.diag(diag)
    delta = _solve(a, rhs)
    free = ~(((z <= 0.0) & (delta < 0)) | ((z >= 1.0) & (delta > 0)))
    if free.all():
        return delta
    delta = np.zeros_like(z)
    if free.any():
        delta[free] = _solve(a[np.ix_(free, free)], rhs[free])
    return delta


def objective_gradient(problem: FitProblem, theta, config: LsConfig = LsConfig()) -> np.ndarray:
    """Gradient of the MSE w.r.t. ``theta`` from the same Jacobian LM uses."""
    space = problem.space
    z = space.to_unit(theta)
    with Evaluator(problem) as ev:
        jac = central_jacobian(ev, z, config.fd_step)
        res = problem.residuals(space.to_theta(z, clamp=False))
    return _gradient(jac, res) / space.theta_jacobian(z)


def fit_least_squares(
    problem: FitProblem, config: LsConfig = LsConfig(), seed: int = 0, workers: int = 1
) -> FitReport:
    """Bounded Levenberg-Marquardt with Marquardt diagonal scaling.

    Works in the unit-cube search coordinates (log axes for the circuit
    constants); a trial step is projected onto the box and accepted only
    when it lowers the MSE.  Hitting the iteration cap, or stopping at a
    point where the Jacobian is rank deficient, yields a non-converged
    report rather than an exception.
    """
    space = problem.space
    with Evaluator(problem, workers) as ev:
        start = time.perf_counter()
        if config.x0 is None:
            z = np.full(space.dim, 0.5)
        else:
            z = np.clip(space.to_unit(config.x0), 0.0, 1.0)
        res = ev.residuals([space.to_theta(z)])[0]
        f = float(np.mean(res * res))
        trace = [f]
        lam = config.damping
        reason = "iteration cap"
        stopped = False
        iterations = 0
        jac = None
        while iterations < config.max_iterations:
            iterations += 1
            jac = central_jacobian(ev, z, config.fd_step)
            grad = _gradient(jac, res)
            if np.linalg.norm(grad) < config.gradient_tol:
                reason, stopped = "gradient norm below tolerance", True
                break
            jtj = jac.T @ jac
            diag = np.diag(jtj).copy()
            diag[diag <= 0] = max(diag.max(), 1.0) * 1e-12
            rhs = -(jac.T @ res)
            while True:
                delta = _damped_step(jtj, diag, rhs, lam, z)
                z_new = np.clip(z + delta, 0.0, 1.0)
                if np.linalg.norm(z_new - z) < config.step_tol:
                    reason, stopped = "step norm below tolerance", True
                    break
                res_new = ev.residuals([space.to_theta(z_new)])[0]
                f_new = float(np.mean(res_new * res_new))
                if f_new < f:
                    z, res, f = z_new, res_new, f_new
                    lam = max(lam / 10.0, 1e-15)
                    break
                lam *= 10.0
                if lam > _MAX_DAMPING:
                    reason, stopped = "damping limit reached", True
                    break
            if stopped:
                break
            trace.append(f)
        degenerate = low_identifiability(jac) if jac is not None else False
        theta = finalize_theta(space.to_theta(z), space)
        elapsed = time.perf_counter() - start
        evaluations = ev.count
    converged = stopped and not degenerate
    if degenerate:
        reason += "; residual Jacobian is rank deficient (low identifiability)"
    return FitReport(
        method="ls",
        theta=tuple(float(v) for v in theta),
        mse=f,
        execution_time=elapsed,
        iterations=iterations,
        evaluations=evaluations,
        trace=tuple(trace),
        seed=int(seed),
        converged=converged,
        low_identifiability=degenerate,
        message=reason,
    )
