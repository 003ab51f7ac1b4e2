"""Adaptive P1 finite elements for the 2D Poisson problem with mixed
Dirichlet-Neumann boundary data: solve, estimate, mark, refine."""

from .driver import ConvergenceRecord, RunConfig, fit_rate, fit_rate_tail, read_records, run
from .estimator import EstimatorBreakdown, estimate
from .fem import DiscreteFunction, SparseSystem, assemble, nodal_interpolant, solve
from .marking import MarkingOutcome, MarkingParams, mark, mark_simple
from .mesh import (
    DIRICHLET,
    NEUMANN,
    Mesh,
    MeshError,
    boundary_frames,
    element_size,
    interior_edges,
    refine,
    refine_uniform,
    seed_refinement_edges,
)
from .problems import ProblemSpec, evaluate_energy_error, get_problem, linear_patch_problem, zshape_problem
from .trace import DirichletTrace, compute_trace, interpolate_nodal, project_l2, project_scott_zhang

__all__ = [
    "ConvergenceRecord",
    "DIRICHLET",
    "DirichletTrace",
    "DiscreteFunction",
    "EstimatorBreakdown",
    "MarkingOutcome",
    "MarkingParams",
    "Mesh",
    "MeshError",
    "NEUMANN",
    "ProblemSpec",
    "RunConfig",
    "SparseSystem",
    "assemble",
    "boundary_frames",
    "compute_trace",
    "element_size",
    "estimate",
    "evaluate_energy_error",
    "fit_rate",
    "fit_rate_tail",
    "get_problem",
    "interior_edges",
    "interpolate_nodal",
    "linear_patch_problem",
    "mark",
    "mark_simple",
    "nodal_interpolant",
    "project_l2",
    "project_scott_zhang",
    "read_records",
    "refine",
    "refine_uniform",
    "run",
    "seed_refinement_edges",
    "solve",
    "zshape_problem",
]
