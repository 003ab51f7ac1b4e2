"""P1 Galerkin assembly and solution with prescribed Dirichlet nodal values.

Dirichlet degrees of freedom are imposed by elimination, so the discrete
solution matches the projected boundary data exactly.  The reduced SPD
system is solved directly for small problems and by Jacobi-preconditioned
conjugate gradients beyond that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import NEUMANN, Mesh, boundary_frames
from .quadrature import SEGMENT_RULE, TRIANGLE_RULE
from .trace import DirichletTrace, dirichlet_vertices

DIRECT_SOLVE_LIMIT = 2000
CG_RELATIVE_TOL = 1e-10


class SolverError(Exception):
    """Linear solver failed to reach the requested accuracy."""


@dataclass(frozen=True)
class DiscreteFunction:
    """Continuous piecewise linear function given by one coefficient per vertex."""

    mesh: Mesh
    coefficients: np.ndarray

    def __post_init__(self):
        coeff = np.asarray(self.coefficients, dtype=np.float64)
        object.__setattr__(self, "coefficients", coeff)
        if len(coeff) != self.mesh.num_vertices:
            raise SolverError("coefficient count must equal the vertex count")
        if not np.isfinite(coeff).all():
            raise SolverError("non-finite solution coefficient")

    def element_gradients(self) -> np.ndarray:
        """Constant gradient per element, shape (ne, 2)."""
        grads = hat_gradients(self.mesh)
        u = self.coefficients[self.mesh.elements]  # (ne, 3)
        return np.einsum("ek,eki->ei", u, grads)


def hat_gradients(mesh: Mesh) -> np.ndarray:
    """Gradients of the three local hat functions per element, (ne, 3, 2)."""
    p = mesh.vertices[mesh.elements]  # (ne, 3, 2)
    areas = mesh.element_areas()
    # opposite-edge vectors rotated by +90 degrees over twice the area
    e = p[:, [2, 0, 1]] - p[:, [1, 2, 0]]  # edge opposite local vertex k
    rot = np.stack([-e[..., 1], e[..., 0]], axis=-1)
    return rot / (2.0 * areas)[:, None, None]


@dataclass(frozen=True)
class SparseSystem:
    """Assembled stiffness matrix and load with the Dirichlet DOF partition."""

    mesh: Mesh
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dirichlet_dofs: np.ndarray
    free_dofs: np.ndarray


def assemble(mesh: Mesh, spec) -> SparseSystem:
    """Stiffness <grad phi_i, grad phi_j> and load (f, phi_i) + (phi, phi_i)_N."""
    nv = mesh.num_vertices
    t = mesh.elements
    areas = mesh.element_areas()
    grads = hat_gradients(mesh)

    local = np.einsum("eki,eli->ekl", grads, grads) * areas[:, None, None]
    rows = np.repeat(t, 3, axis=1).reshape(-1)
    cols = np.tile(t, (1, 3)).reshape(-1)
    matrix = sp.csr_matrix((local.reshape(-1), (rows, cols)), shape=(nv, nv))

    rhs = np.zeros(nv)
    # volume load via the triangle rule; hat values at the nodes are the
    # barycentric coordinates themselves
    bary = TRIANGLE_RULE.nodes  # (nq, 3)
    pts = np.einsum("qk,eki->eqi", bary, mesh.vertices[t])
    fvals = spec.volume_load(pts.reshape(-1, 2)).reshape(len(t), -1)
    contrib = areas[:, None] * np.einsum("q,eq,qk->ek", TRIANGLE_RULE.weights, fvals, bary)
    np.add.at(rhs, t, contrib)

    frames = boundary_frames(mesh)
    neumann = np.flatnonzero(mesh.boundary_labels == NEUMANN)
    if len(neumann):
        a = mesh.vertices[mesh.boundary_facets[neumann, 0]]
        b = mesh.vertices[mesh.boundary_facets[neumann, 1]]
        tq = SEGMENT_RULE.nodes
        pts = a[:, None, :] + tq[None, :, None] * (b - a)[:, None, :]
        normals = np.repeat(frames.normal[neumann], len(tq), axis=0)
        phi = spec.neumann_flux(pts.reshape(-1, 2), normals).reshape(len(neumann), -1)
        w = SEGMENT_RULE.weights
        la = frames.length[neumann] * ((phi * (1.0 - tq)) @ w)
        lb = frames.length[neumann] * ((phi * tq) @ w)
        np.add.at(rhs, mesh.boundary_facets[neumann, 0], la)
        np.add.at(rhs, mesh.boundary_facets[neumann, 1], lb)

    constrained = dirichlet_vertices(mesh)
    free = np.setdiff1d(np.arange(nv), constrained, assume_unique=False)
    return SparseSystem(mesh, matrix, rhs, constrained, free)


def solve(system: SparseSystem, dirichlet: DirichletTrace) -> DiscreteFunction:
    """Solve for the coefficients with the given Dirichlet nodal values."""
    x = np.zeros(system.matrix.shape[0])
    x[system.dirichlet_dofs] = dirichlet.vector(system.dirichlet_dofs)
    free = system.free_dofs
    if len(free) == 0:
        return DiscreteFunction(system.mesh, x)

    a_ff = system.matrix[free][:, free].tocsr()
    b = system.rhs[free] - system.matrix[free] @ x

    if len(free) <= DIRECT_SOLVE_LIMIT:
        x[free] = spla.spsolve(a_ff.tocsc(), b)
        return DiscreteFunction(system.mesh, x)

    diag = a_ff.diagonal()
    precond = spla.LinearOperator(a_ff.shape, matvec=lambda v: v / diag)
    maxiter = 10 * len(free)
    sol, info = spla.cg(a_ff, b, rtol=CG_RELATIVE_TOL, atol=0.0, maxiter=maxiter, M=precond)
    if info != 0:
        residual = np.linalg.norm(b - a_ff @ sol)
        raise SolverError(
            f"conjugate gradients did not converge within {maxiter} iterations "
            f"(residual {residual:.3e}, rhs norm {np.linalg.norm(b):.3e})")
    x[free] = sol
    return DiscreteFunction(system.mesh, x)


def nodal_interpolant(mesh: Mesh, function) -> DiscreteFunction:
    """Vertex interpolant of a pointwise-evaluable function."""
    return DiscreteFunction(mesh, function(mesh.vertices))
