"""Discretization of Dirichlet boundary data as nodal values.

Three uniformly stable strategies produce the discrete trace in the space
of continuous piecewise linears on the Dirichlet facets: the boundary L2
projection, a Scott-Zhang style facet-averaged projection, and plain nodal
interpolation.  All of them reproduce functions that already lie in the
discrete trace space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import DIRICHLET, Mesh
from .quadrature import SEGMENT_RULE, segment_points


class TraceError(Exception):
    """Invalid input to a trace discretization."""


@dataclass(frozen=True)
class DirichletTrace:
    """Nodal values on the Dirichlet boundary vertices."""

    nodal_values: dict[int, float]

    def __post_init__(self):
        if not all(np.isfinite(v) for v in self.nodal_values.values()):
            raise TraceError("non-finite Dirichlet nodal value")

    def vector(self, vertex_ids: np.ndarray) -> np.ndarray:
        return np.array([self.nodal_values[int(v)] for v in vertex_ids])


def dirichlet_facets(mesh: Mesh) -> np.ndarray:
    """Dirichlet facets as an (nd, 2) vertex-pair array."""
    return mesh.boundary_facets[mesh.boundary_labels == DIRICHLET]


def dirichlet_vertices(mesh: Mesh) -> np.ndarray:
    """Sorted unique vertex ids on the Dirichlet boundary."""
    facets = dirichlet_facets(mesh)
    if len(facets) == 0:
        raise TraceError("mesh has no Dirichlet facets")
    return np.unique(facets)


def project_l2(mesh: Mesh, g, g_tangential=None) -> DirichletTrace:
    """L2-orthogonal projection of g onto piecewise linears on the facets.

    Assembles the 1D boundary mass matrix over all Dirichlet facets and
    solves against the moment vector of g.  Disjoint boundary components
    decouple into independent diagonal blocks of the same system.
    """
    verts = dirichlet_vertices(mesh)
    index = {int(v): i for i, v in enumerate(verts)}
    n = len(verts)
    rows, cols, vals = [], [], []
    rhs = np.zeros(n)
    for a, b in dirichlet_facets(mesh):
        pa, pb = mesh.vertices[a], mesh.vertices[b]
        length = float(np.hypot(*(pb - pa)))
        ia, ib = index[int(a)], index[int(b)]
        rows += [ia, ib, ia, ib]
        cols += [ia, ib, ib, ia]
        vals += [length / 3.0, length / 3.0, length / 6.0, length / 6.0]
        gv = g(segment_points(SEGMENT_RULE, pa, pb))
        w, t = SEGMENT_RULE.weights, SEGMENT_RULE.nodes
        rhs[ia] += length * float(w @ (gv * (1.0 - t)))
        rhs[ib] += length * float(w @ (gv * t))
    mass = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    values = spla.spsolve(mass, rhs)
    assert np.isfinite(values).all(), "boundary mass matrix must be regular on a valid mesh"
    return DirichletTrace({int(v): float(values[i]) for i, v in enumerate(verts)})


def scott_zhang_facet_choice(mesh: Mesh) -> dict[int, tuple[int, int]]:
    """Deterministic facet pick per Dirichlet vertex: the containing facet
    with the smallest (first-vertex, second-vertex) pair."""
    choice: dict[int, tuple[int, int]] = {}
    for a, b in sorted((int(a), int(b)) for a, b in dirichlet_facets(mesh)):
        for z in (a, b):
            if z not in choice or (a, b) < choice[z]:
                choice[z] = (a, b)
    return choice


def project_scott_zhang(mesh: Mesh, g, g_tangential=None) -> DirichletTrace:
    """Facet-local dual-basis averaging of g.

    For vertex z with chosen facet parametrized by t in [0, 1] starting at z,
    the value is the moment of g against the dual function 4 - 6t of the P1
    nodal basis, which reproduces linear data exactly.
    """
    values = {}
    w, t = SEGMENT_RULE.weights, SEGMENT_RULE.nodes
    psi = 4.0 - 6.0 * t
    for z, (a, b) in scott_zhang_facet_choice(mesh).items():
        other = b if z == a else a
        pts = segment_points(SEGMENT_RULE, mesh.vertices[z], mesh.vertices[other])
        values[z] = float(w @ (psi * g(pts)))
    return DirichletTrace(values)


def interpolate_nodal(mesh: Mesh, g, g_tangential=None) -> DirichletTrace:
    """Pointwise nodal interpolation, well-defined for 2D traces."""
    verts = dirichlet_vertices(mesh)
    vals = g(mesh.vertices[verts])
    return DirichletTrace({int(v): float(x) for v, x in zip(verts, vals)})


TRACE_STRATEGIES = {
    "l2": project_l2,
    "scott-zhang": project_scott_zhang,
    "nodal": interpolate_nodal,
}


def compute_trace(strategy: str, mesh: Mesh, spec) -> DirichletTrace:
    try:
        project = TRACE_STRATEGIES[strategy]
    except KeyError:
        raise TraceError(
            f"unknown projection {strategy!r}; available: {sorted(TRACE_STRATEGIES)}") from None
    return project(mesh, spec.dirichlet_trace, spec.dirichlet_tangential_derivative)
