"""Sequential Rademacher complexity of finite function classes."""

from .core import (
    FunctionClass,
    GammaSet,
    SymMatrix,
    G_operator,
    as_gamma,
    envelope_bound,
    g_max,
    gamma_of,
    load_class,
    load_class_file,
)
from .exact_dp import DPConfig, brute_force_value, convergence_table, dp_value
from .gaussian_iid import Measure, covariance, emax_gaussian_closed2, emax_gaussian_mc, iid_asymptotic
from .gheat import build_grid, solve_gheat, solve_heat
from .bounds import a_of_class, adjudicate_heat_upper, heat_upper, theorem3_sandwich
from .control import ConstantPolicy, greedy_policy_from_solution, simulate_policy

__version__ = "0.1.0"

__all__ = [
    "ConstantPolicy",
    "DPConfig",
    "FunctionClass",
    "G_operator",
    "GammaSet",
    "Measure",
    "SymMatrix",
    "a_of_class",
    "adjudicate_heat_upper",
    "as_gamma",
    "brute_force_value",
    "build_grid",
    "convergence_table",
    "covariance",
    "dp_value",
    "emax_gaussian_closed2",
    "emax_gaussian_mc",
    "envelope_bound",
    "g_max",
    "gamma_of",
    "greedy_policy_from_solution",
    "heat_upper",
    "iid_asymptotic",
    "load_class",
    "load_class_file",
    "simulate_policy",
    "solve_gheat",
    "solve_heat",
    "theorem3_sandwich",
]
