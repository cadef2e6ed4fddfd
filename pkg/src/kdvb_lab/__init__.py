"""Numerical laboratory for the Korteweg-de Vries-Burgers equation
u_t - u_xxx - u_xx = u u_x on the half-line: linear solution operators, a
Picard solver, a Carleman weight check, periodic observability and control
constructions."""

from . import carleman, control, linear, nonlinear, numerics, periodic
from .linear import BoundaryData, HalfLineState, characteristic_roots, halfline_semigroup, whole_line_propagate
from .nonlinear import IbvpProblem, solve_fixed_point
from .numerics import Grid1D

__version__ = "0.1.0"

__all__ = ["carleman", "control", "linear", "nonlinear", "numerics", "periodic", "BoundaryData", "HalfLineState",
           "IbvpProblem", "Grid1D", "characteristic_roots", "halfline_semigroup", "solve_fixed_point",
           "whole_line_propagate", "__version__"]
