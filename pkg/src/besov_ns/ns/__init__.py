"""Compressible Navier-Stokes in (a, d, Omega) variables."""
from .hodge import hodge_reconstruct, hodge_split
from .linear import LinearConvectionResult, linear_convection_solve
from .params import PhysicsParams, Rescaling, nondimensionalize
from .solver import (BlowUpError, NonlinearTerms, SolveResult, SolverConfig, SolverState,
                     nonlinear_rhs, solve, step)

__all__ = [
    "BlowUpError", "LinearConvectionResult", "NonlinearTerms", "PhysicsParams", "Rescaling",
    "SolveResult", "SolverConfig", "SolverState", "hodge_reconstruct", "hodge_split",
    "linear_convection_solve", "nondimensionalize", "nonlinear_rhs", "solve", "step",
]
