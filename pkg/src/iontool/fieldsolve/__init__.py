"""Electrostatic field solvers: finite differences, 1D FEM and the boundary element method."""
from .bem import (BemSystem, QuadratureOptions, SurfaceSolution, assemble_bem, axis_basis_matrix, axis_points,
                  evaluate_field, evaluate_potential, influence_matrices, solve_surface, unit_solutions)
from .fdm import Grid1D, solve_laplace_1d_fdm, solve_laplace_2d_sor, solve_poisson_1d_fem, thomas
from .geometry import ElectrodeGeometry, TrapLayout, cylinder, five_segment_trap, icosphere, merge
from .quadrature import TriangleRule, composite_rule, exact_monomial, triangle_rule

__all__ = [
    "BemSystem", "QuadratureOptions", "SurfaceSolution", "assemble_bem", "axis_basis_matrix", "axis_points",
    "evaluate_field", "evaluate_potential", "influence_matrices", "solve_surface", "unit_solutions",
    "Grid1D", "solve_laplace_1d_fdm", "solve_laplace_2d_sor", "solve_poisson_1d_fem", "thomas",
    "ElectrodeGeometry", "TrapLayout", "cylinder", "five_segment_trap", "icosphere", "merge",
    "TriangleRule", "composite_rule", "exact_monomial", "triangle_rule",
]
