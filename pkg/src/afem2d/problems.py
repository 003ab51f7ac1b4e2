"""Benchmark boundary-value problems: data fields, exact solutions, meshes.

All scalar fields are vectorized callables mapping an (n, 2) array of points
to an (n,) array of values.  Boundary data that depend on the facet direction
additionally receive the facet's unit tangent resp. outward unit normal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .mesh import DIRICHLET, NEUMANN, Mesh, boundary_frames, seed_refinement_edges
from .quadrature import SEGMENT_RULE, TRIANGLE_RULE, integrate_triangle, integrate_triangle_subdivided, segment_points


class ProblemError(Exception):
    """Inconsistent or unusable problem data."""


@dataclass(frozen=True)
class ProblemSpec:
    """Poisson problem -div(grad u) = f with mixed boundary data.

    dirichlet_tangential_derivative(pts, tangent) is the arclength derivative
    of the Dirichlet trace along a facet with the given unit tangent;
    neumann_flux(pts, normal) is the prescribed outward normal flux.
    """

    name: str
    volume_load: Callable
    dirichlet_trace: Callable
    dirichlet_tangential_derivative: Callable
    neumann_flux: Callable
    initial_mesh: Mesh
    exact_solution: Callable | None = None
    exact_gradient: Callable | None = None
    gradient_singularity: np.ndarray | None = None

    def __post_init__(self):
        mesh = self.initial_mesh
        if mesh.boundary_length(DIRICHLET) <= 0.0:
            raise ProblemError("the Dirichlet boundary must have positive length")
        if self.exact_solution is not None:
            self._check_compatibility()

    def _check_compatibility(self, tol: float = 1e-10):
        """Boundary data must agree with the exact solution's trace and flux."""
        mesh = self.initial_mesh
        frames = boundary_frames(mesh)
        for k, (pair, label) in enumerate(zip(mesh.boundary_facets, mesh.boundary_labels)):
            pts = segment_points(SEGMENT_RULE, mesh.vertices[pair[0]], mesh.vertices[pair[1]])
            if label == DIRICHLET:
                err = np.abs(self.dirichlet_trace(pts) - self.exact_solution(pts)).max()
                if err > tol:
                    raise ProblemError(f"dirichlet trace disagrees with exact solution by {err:.2e}")
            else:
                flux = self.neumann_flux(pts, frames.normal[k])
                exact = self.exact_gradient(pts) @ frames.normal[k]
                err = np.abs(flux - exact).max()
                if err > tol:
                    raise ProblemError(f"neumann flux disagrees with exact solution by {err:.2e}")


def _zshape_polar(pts: np.ndarray):
    """Polar coordinates with the branch cut inside the removed wedge.

    The angle is continuous on the Z-shaped domain: it runs from -pi/2 on the
    vertical slit up to 5*pi/4 on the diagonal slit.
    """
    x, y = pts[:, 0], pts[:, 1]
    r = np.hypot(x, y)
    phi = np.arctan2(y, x)
    return r, np.where(phi < -0.5 * np.pi, phi + 2.0 * np.pi, phi)


def zshape_problem() -> ProblemSpec:
    """Z-shaped domain with the exact solution r^(4/7) * cos(4*phi/7).

    The solution is harmonic with a generic gradient singularity at the
    re-entrant corner in the origin.  The Dirichlet boundary consists of the
    diagonal slit edge and the whole left side; the rest is Neumann.
    """
    vertices = np.array([
        [0.0, 0.0],
        [0.0, -1.0],
        [1.0, -1.0],
        [1.0, 0.0],
        [1.0, 1.0],
        [0.0, 1.0],
        [-1.0, 1.0],
        [-1.0, -1.0],
    ])
    elements = seed_refinement_edges(vertices, np.array([
        [0, 1, 2],
        [0, 2, 3],
        [0, 3, 4],
        [0, 4, 5],
        [0, 5, 6],
        [0, 6, 7],
    ]))
    facets = np.array([[0, 1], [1, 2], [2, 3], [3, 4], [4, 5], [5, 6], [6, 7], [7, 0]])
    labels = np.array([NEUMANN] * 6 + [DIRICHLET, DIRICHLET])
    mesh = Mesh(vertices, elements, facets, labels)

    lam = 4.0 / 7.0

    def solution(pts):
        r, phi = _zshape_polar(pts)
        return r ** lam * np.cos(lam * phi)

    def gradient(pts):
        r, phi = _zshape_polar(pts)
        mag = lam * r ** (lam - 1.0)
        psi = (lam - 1.0) * phi
        return np.stack([mag * np.cos(psi), -mag * np.sin(psi)], axis=1)

    def volume_load(pts):
        return np.zeros(len(pts))

    def trace(pts):
        return solution(pts)

    def trace_tangential(pts, tangent):
        t = np.broadcast_to(np.asarray(tangent, dtype=float), pts.shape)
        return np.einsum("ij,ij->i", gradient(pts), t)

    def flux(pts, normal):
        n = np.broadcast_to(np.asarray(normal, dtype=float), pts.shape)
        return np.einsum("ij,ij->i", gradient(pts), n)

    return ProblemSpec(
        name="zshape2d",
        volume_load=volume_load,
        dirichlet_trace=trace,
        dirichlet_tangential_derivative=trace_tangential,
        neumann_flux=flux,
        initial_mesh=mesh,
        exact_solution=solution,
        exact_gradient=gradient,
        gradient_singularity=np.zeros(2),
    )


def linear_patch_problem() -> ProblemSpec:
    """Unit square with the affine solution 2x + 3y - 1.

    P1 elements reproduce affine solutions exactly, so estimator and energy
    error must vanish on any mesh; Dirichlet data live on the left and bottom
    sides, Neumann data on the rest.
    """
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    elements = seed_refinement_edges(vertices, np.array([[0, 1, 2], [0, 2, 3]]))
    facets = np.array([[0, 1], [1, 2], [2, 3], [3, 0]])
    labels = np.array([DIRICHLET, NEUMANN, NEUMANN, DIRICHLET])
    mesh = Mesh(vertices, elements, facets, labels)

    grad = np.array([2.0, 3.0])

    def solution(pts):
        return pts @ grad - 1.0

    def gradient(pts):
        return np.broadcast_to(grad, (len(pts), 2)).copy()

    def volume_load(pts):
        return np.zeros(len(pts))

    def trace_tangential(pts, tangent):
        t = np.broadcast_to(np.asarray(tangent, dtype=float), pts.shape)
        return t @ grad

    def flux(pts, normal):
        n = np.broadcast_to(np.asarray(normal, dtype=float), pts.shape)
        return n @ grad

    return ProblemSpec(
        name="linear-patch",
        volume_load=volume_load,
        dirichlet_trace=solution,
        dirichlet_tangential_derivative=trace_tangential,
        neumann_flux=flux,
        initial_mesh=mesh,
        exact_solution=solution,
        exact_gradient=gradient,
    )


PROBLEMS = {
    "zshape2d": zshape_problem,
    "linear-patch": linear_patch_problem,
}


def get_problem(name: str) -> ProblemSpec:
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ProblemError(f"unknown problem {name!r}; available: {sorted(PROBLEMS)}") from None
    return factory()


def evaluate_energy_error(spec: ProblemSpec, mesh: Mesh, solution, subdivision_depth: int = 3) -> float:
    """L2 norm of grad(u - U) for the exact solution u of the problem.

    Elements touching the gradient singularity are integrated with local
    quadrature subdivision; everything else uses the plain triangle rule.
    """
    if spec.exact_gradient is None:
        raise ProblemError(f"problem {spec.name!r} has no exact solution")
    grads = solution.element_gradients()
    coords = mesh.vertices[mesh.elements]
    areas = mesh.element_areas()

    singular = np.zeros(mesh.num_elements, dtype=bool)
    if spec.gradient_singularity is not None:
        d = coords - spec.gradient_singularity
        singular = (np.hypot(d[..., 0], d[..., 1]) < 1e-12).any(axis=1)

    regular = ~singular
    total = 0.0
    if regular.any():
        pts = np.einsum("qk,eki->eqi", TRIANGLE_RULE.nodes, coords[regular])
        nq = len(TRIANGLE_RULE.weights)
        diff = spec.exact_gradient(pts.reshape(-1, 2)) - np.repeat(grads[regular], nq, axis=0)
        sq = np.einsum("ij,ij->i", diff, diff).reshape(-1, nq)
        total += float(areas[regular] @ (sq @ TRIANGLE_RULE.weights))

    for k in np.flatnonzero(singular):
        gk = grads[k]

        def integrand(pts):
            d = spec.exact_gradient(pts) - gk
            return np.einsum("ij,ij->i", d, d)

        total += integrate_triangle_subdivided(
            TRIANGLE_RULE, integrand, coords[k], spec.gradient_singularity,
            depth=subdivision_depth)
    return float(np.sqrt(total))
