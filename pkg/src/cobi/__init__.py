"""Constrained bi-objective test problems with computable Pareto sets."""

from cobi.constraints import (
    ConstraintSet,
    ConvexSelection,
    LinearConstraint,
    MultipeakConstraint,
    QuadraticConstraint,
    convex_selections,
    is_feasible,
)
from cobi.core import MonotoneTransform, SignPreservingTransform, SpdMatrix, norm_a, spd_from_spectrum, spd_solve
from cobi.generator import GeneratorConfig, generate, load, save
from cobi.objectives import MultipeakObjective, QuadraticPeak, objective_value
from cobi.pareto import approx_ps, classify, compute_ideal_nadir, epsilon_weights
from cobi.problem import BiArchive, CobiProblem, ParetoApproximation, ProblemType, dominates, evaluate, hypervolume
from cobi.projection import build_scalarized, project

__version__ = "0.1.0"

__all__ = [
    "BiArchive", "CobiProblem", "ConstraintSet", "ConvexSelection", "GeneratorConfig",
    "LinearConstraint", "MonotoneTransform", "MultipeakConstraint", "MultipeakObjective",
    "ParetoApproximation", "ProblemType", "QuadraticConstraint", "QuadraticPeak",
    "SignPreservingTransform", "SpdMatrix", "approx_ps", "build_scalarized", "classify",
    "compute_ideal_nadir", "convex_selections", "dominates", "epsilon_weights", "evaluate",
    "generate", "hypervolume", "is_feasible", "load", "norm_a", "objective_value", "project",
    "save", "spd_from_spectrum", "spd_solve",
]
