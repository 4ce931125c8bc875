"""Reduced Landau-de Gennes equilibria on regular polygons.

The planar order parameter ``p = (p11, p12)`` minimises a Dirichlet energy
plus a quartic bulk term scaled by ``lambda^2`` (the squared domain size),
with tangent boundary data.  The package provides meshes, closed-form
limits, a Newton finite element solver, stability analysis and
continuation in ``lambda^2``.
"""

from .boundary import dirichlet_values, enumerate_splay_pairs, gamma_dirichlet, pair_class
from .conformal import ConformalMap
from .continuation import (
    BranchRecord,
    SolutionBranch,
    StepPolicy,
    classify_branch,
    detect_transitions,
    find_bd_states,
    ring_state,
    sweep,
)
from .fem import PField, energy, newton_solve, read_snapshot, solve_linear_limit, write_snapshot
from .geometry import Mesh, PolygonDomain, make_domain, triangulate
from .limits import gamma_infinity, p_infinity, poisson_eval, ring_solution
from .stability import classify_stability, field_eigen, smallest_eigenvalue
from .tensor import DEFAULT_CONSTANTS, MaterialConstants

__version__ = "0.1.0"

__all__ = [
    "BranchRecord",
    "ConformalMap",
    "DEFAULT_CONSTANTS",
    "MaterialConstants",
    "Mesh",
    "PField",
    "PolygonDomain",
    "SolutionBranch",
    "StepPolicy",
    "classify_branch",
    "classify_stability",
    "detect_transitions",
    "dirichlet_values",
    "energy",
    "enumerate_splay_pairs",
    "field_eigen",
    "find_bd_states",
    "gamma_dirichlet",
    "gamma_infinity",
    "make_domain",
    "newton_solve",
    "p_infinity",
    "pair_class",
    "poisson_eval",
    "read_snapshot",
    "ring_solution",
    "ring_state",
    "smallest_eigenvalue",
    "solve_linear_limit",
    "sweep",
    "triangulate",
    "write_snapshot",
]
