"""MILP models for the controlled dynamics, LP emission, and solution checking."""

from .builders import (MilpBuildOptions, bc_advanced_assignment, bc_basic_assignment, build_bc_advanced_model,
                       build_bc_basic_model, build_dg_model, build_model, dg_assignment)
from .lpformat import emit_lp, emit_priorities, lint_lp, parse_lp
from .model import MilpModel, check_big_m
from .params import SOLVER_PARAMETERS, emit_parameters
from .solution import (SolutionError, SolutionMap, SolutionMismatch, extract_control, parse_solution,
                       verify_control)

__all__ = [
    "MilpBuildOptions", "MilpModel", "SOLVER_PARAMETERS", "SolutionError", "SolutionMap", "SolutionMismatch",
    "bc_advanced_assignment", "bc_basic_assignment", "build_bc_advanced_model", "build_bc_basic_model",
    "build_dg_model", "build_model", "check_big_m", "dg_assignment", "emit_lp", "emit_parameters",
    "emit_priorities", "extract_control", "lint_lp", "parse_lp", "parse_solution", "verify_control",
]
