"""Parameter identification: objective plus four interchangeable optimizers."""

from .annealing import SaConfig, fit_simulated_annealing
from .genetic import GaConfig, fit_genetic
from .grid import grid_oracle
from .least_squares import LsConfig, fit_least_squares, objective_gradient
from .problem import (
    CIRCUIT_NAMES,
    DEFAULT_BOUNDS,
    FitProblem,
    FitReport,
    SearchSpace,
    canonicalize,
    joint_space,
    make_ocv_curve,
    objective_mse,
)
from .swarm import PsoConfig, fit_pso

METHODS = {
    "ls": (fit_least_squares, LsConfig),
    "pso": (fit_pso, PsoConfig),
    "sa": (fit_simulated_annealing, SaConfig),
    "ga": (fit_genetic, GaConfig),
}

METHOD_LABELS = {
    "ls": "Least Squares",
    "pso": "Particle Swarm",
    "sa": "Simulated Annealing",
    "ga": "Genetic Algorithm",
}


def run_method(name: str, problem: FitProblem, config=None, seed: int = 42, workers: int = 1) -> FitReport:
    """Dispatch to the optimizer registered under ``name``."""
    try:
        fit, config_cls = METHODS[name]
    except KeyError:
        raise KeyError(f"unknown method {name!r}; valid methods: {', '.join(METHODS)}") from None
    return fit(problem, config if config is not None else config_cls(), seed=seed, workers=workers)


__all__ = [
    "CIRCUIT_NAMES",
    "DEFAULT_BOUNDS",
    "METHODS",
    "METHOD_LABELS",
    "FitProblem",
    "FitReport",
    "GaConfig",
    "LsConfig",
    "PsoConfig",
    "SaConfig",
    "SearchSpace",
    "canonicalize",
    "fit_genetic",
    "fit_least_squares",
    "fit_pso",
    "fit_simulated_annealing",
    "grid_oracle",
    "joint_space",
    "make_ocv_curve",
    "objective_gradient",
    "objective_mse",
    "run_method",
]
