"""Bond percolation on two-type (masked / unmasked) configuration-model networks."""
from .analytic import (AnalyticPrediction, ConvergenceError, MutationAnalogue, SolverError,
                       emergence_probability, epidemic_size, mutation_epidemic_size,
                       mutation_map, predict, r0)
from .degree import DegreeDistribution, load_pmf
from .graph import ContactNetwork, MaskModelParams, build_network
from .simulate import SimulationConfig, run_ensemble, run_outbreak

__all__ = [
    "AnalyticPrediction", "ConvergenceError", "ContactNetwork", "DegreeDistribution",
    "MaskModelParams", "MutationAnalogue", "SimulationConfig", "SolverError",
    "build_network", "emergence_probability", "epidemic_size", "load_pmf",
    "mutation_epidemic_size", "mutation_map", "predict", "r0", "run_ensemble", "run_outbreak",
]
