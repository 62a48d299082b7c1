"""Reachable tubes and cost-limited reachable tubes from a Hamilton-Jacobi
equation with running cost, solved on Cartesian grids."""

from .grid import Grid, ValueField, gradient_upwind, interpolate, upwind_differences
from .hamiltonian import numerical_hamiltonian, optimize_controls
from .rollout import RolloutRecord, simulate, synthesize_controls, verify_crt
from .scenario import (
    AssumptionError, ControlBox, Scenario, analytic_rt_linear2d, builtin_linear2d, builtin_pursuit,
    compute_gamma, masked_cost, masked_dynamics,
)
from .sets import LevelMask, jaccard_error, nesting_check, rasterize_analytic, sublevel
from .solver import SolveConfig, SolveResult, dpp_residual, run_algorithm1, solve_classical, solve_improved

__all__ = [
    "AssumptionError", "ControlBox", "Grid", "LevelMask", "RolloutRecord", "Scenario", "SolveConfig",
    "SolveResult", "ValueField", "analytic_rt_linear2d", "builtin_linear2d", "builtin_pursuit",
    "compute_gamma", "dpp_residual", "gradient_upwind", "interpolate", "jaccard_error", "masked_cost",
    "masked_dynamics", "nesting_check", "numerical_hamiltonian", "optimize_controls", "rasterize_analytic",
    "run_algorithm1", "simulate", "solve_classical", "solve_improved", "sublevel", "synthesize_controls",
    "upwind_differences", "verify_crt",
]
