"""Residual error estimator with data oscillations and the component split.

For lowest-order elements the discrete Laplacian vanishes elementwise, so
the volume residual reduces to the load itself and all elementwise L2
projections onto polynomial degree p-1 are projections onto constants,
i.e. facet resp. element means.

Accounting convention: the per-element indicators sum normal-derivative
jumps over the whole element boundary, so every interior edge contributes
to both neighbours with the neighbour's own area weight.  The per-edge
component split counts each edge once with the average of the two area
weights; twice that split therefore equals the per-element jump total
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import DIRICHLET, NEUMANN, Mesh, boundary_frames
from .quadrature import SEGMENT_RULE, TRIANGLE_RULE


class EstimatorError(Exception):
    """Inconsistent inputs to the estimator."""


@dataclass(frozen=True)
class EstimatorBreakdown:
    """All indicator and oscillation contributions of one mesh/solution pair.

    Facet-indexed arrays are aligned with the listed boundary-facet index
    arrays (positions into mesh.boundary_facets); edge-indexed arrays are
    aligned with interior_edge_pairs.
    """

    rho_sq_per_element: np.ndarray
    volume_sq_per_element: np.ndarray
    oscT_sq_per_element: np.ndarray

    interior_edge_pairs: np.ndarray
    jump_sq_per_edge: np.ndarray

    dirichlet_facets: np.ndarray
    dirichlet_owner: np.ndarray
    oscD_sq_per_facet: np.ndarray

    neumann_facets: np.ndarray
    neumann_owner: np.ndarray
    neumann_sq_per_facet: np.ndarray
    oscN_sq_per_facet: np.ndarray

    @property
    def rho_sq(self) -> float:
        return float(self.rho_sq_per_element.sum())

    @property
    def oscD_sq(self) -> float:
        return float(self.oscD_sq_per_facet.sum())

    @property
    def oscN_sq(self) -> float:
        return float(self.oscN_sq_per_facet.sum())

    @property
    def oscT_sq(self) -> float:
        return float(self.oscT_sq_per_element.sum())

    @property
    def jump_sq(self) -> float:
        return float(self.jump_sq_per_edge.sum())

    @property
    def volume_sq(self) -> float:
        return float(self.volume_sq_per_element.sum())

    @property
    def neumann_sq(self) -> float:
        return float(self.neumann_sq_per_facet.sum())

    @property
    def eta_sq(self) -> float:
        return self.rho_sq + self.oscD_sq

    def eta_local_sq_per_element(self) -> np.ndarray:
        """Elementwise localized estimator: rho(T)^2 plus the Dirichlet
        oscillations of the facets owned by T."""
        out = self.rho_sq_per_element.copy()
        np.add.at(out, self.dirichlet_owner, self.oscD_sq_per_facet)
        return out


def _facet_quadrature(mesh: Mesh, facet_ids: np.ndarray):
    a = mesh.vertices[mesh.boundary_facets[facet_ids, 0]]
    b = mesh.vertices[mesh.boundary_facets[facet_ids, 1]]
    t = SEGMENT_RULE.nodes
    pts = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
    return pts.reshape(-1, 2)


def _mean_deviation_sq(values: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Per-facet integral of (v - mean(v))^2 from nodal values (nf, nq)."""
    w = SEGMENT_RULE.weights
    mean = values @ w
    dev = values - mean[:, None]
    return lengths * ((dev * dev) @ w)


def oscillations_dirichlet(mesh: Mesh, spec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(facet ids, owner elements, oscD^2 per facet) for the Dirichlet facets.

    oscD(E)^2 = sqrt(|T|) * || g' - mean(g') ||^2 on E, with g' the arclength
    derivative of the Dirichlet trace and T the owning element.
    """
    frames = boundary_frames(mesh)
    ids = np.flatnonzero(mesh.boundary_labels == DIRICHLET)
    if len(ids) == 0:
        return ids, ids.copy(), np.zeros(0)
    pts = _facet_quadrature(mesh, ids)
    tangents = np.repeat(frames.tangent[ids], len(SEGMENT_RULE.nodes), axis=0)
    gprime = spec.dirichlet_tangential_derivative(pts, tangents).reshape(len(ids), -1)
    weights = np.sqrt(mesh.element_areas()[frames.owner[ids]])
    osc = weights * _mean_deviation_sq(gprime, frames.length[ids])
    return ids, frames.owner[ids], osc


def oscillations_neumann(mesh: Mesh, spec, solution=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(facet ids, owner elements, oscN^2 per facet) for the Neumann facets.

    Uses the prescribed flux itself, not the flux residual; the residual
    belongs to the element indicators.
    """
    frames = boundary_frames(mesh)
    ids = np.flatnonzero(mesh.boundary_labels == NEUMANN)
    if len(ids) == 0:
        return ids, ids.copy(), np.zeros(0)
    pts = _facet_quadrature(mesh, ids)
    normals = np.repeat(frames.normal[ids], len(SEGMENT_RULE.nodes), axis=0)
    phi = spec.neumann_flux(pts, normals).reshape(len(ids), -1)
    weights = np.sqrt(mesh.element_areas()[frames.owner[ids]])
    osc = weights * _mean_deviation_sq(phi, frames.length[ids])
    return ids, frames.owner[ids], osc


def oscillations_element(mesh: Mesh, spec, solution=None) -> np.ndarray:
    """oscT^2 per element: |T| * || f - mean(f) ||^2 on T (P1: f + Lap U = f)."""
    areas = mesh.element_areas()
    pts = np.einsum("qk,eki->eqi", TRIANGLE_RULE.nodes, mesh.vertices[mesh.elements])
    f = spec.volume_load(pts.reshape(-1, 2)).reshape(mesh.num_elements, -1)
    w = TRIANGLE_RULE.weights
    mean = f @ w
    dev = f - mean[:, None]
    return areas * areas * ((dev * dev) @ w)


def estimate(mesh: Mesh, spec, solution) -> EstimatorBreakdown:
    """Evaluate every estimator contribution for a P1 solution on its mesh."""
    if solution.mesh is not mesh and solution.mesh.num_vertices != mesh.num_vertices:
        raise EstimatorError("solution was computed on a different mesh")
    areas = mesh.element_areas()
    sqrt_areas = np.sqrt(areas)
    grads = solution.element_gradients()
    rho = np.zeros(mesh.num_elements)

    # volume residual |T| * ||f||^2 (P1: the discrete Laplacian vanishes)
    pts = np.einsum("qk,eki->eqi", TRIANGLE_RULE.nodes, mesh.vertices[mesh.elements])
    f = spec.volume_load(pts.reshape(-1, 2)).reshape(mesh.num_elements, -1)
    volume = areas * areas * ((f * f) @ TRIANGLE_RULE.weights)
    rho += volume

    # normal-derivative jumps over interior edges
    edges, elem_edges = mesh._edge_data
    flat = elem_edges.reshape(-1)
    owners = np.repeat(np.arange(mesh.num_elements), 3)
    order = np.argsort(flat, kind="stable")
    flat_sorted, owners_sorted = flat[order], owners[order]
    counts = np.bincount(flat_sorted, minlength=len(edges))
    starts = np.concatenate([[0], np.cumsum(counts)])
    interior = np.flatnonzero(counts == 2)
    left = owners_sorted[starts[interior]]
    right = owners_sorted[starts[interior] + 1]
    pair = edges[interior]
    d = mesh.vertices[pair[:, 1]] - mesh.vertices[pair[:, 0]]
    lengths = np.hypot(d[:, 0], d[:, 1])
    normal = np.stack([d[:, 1], -d[:, 0]], axis=1) / lengths[:, None]
    jump = np.einsum("ij,ij->i", grads[left] - grads[right], normal)
    edge_norm_sq = lengths * jump * jump  # ||[dU/dn]||^2 on the edge
    np.add.at(rho, left, sqrt_areas[left] * edge_norm_sq)
    np.add.at(rho, right, sqrt_areas[right] * edge_norm_sq)
    jump_split = 0.5 * (sqrt_areas[left] + sqrt_areas[right]) * edge_norm_sq

    # Neumann flux residual phi - dU/dn
    frames = boundary_frames(mesh)
    nids = np.flatnonzero(mesh.boundary_labels == NEUMANN)
    if len(nids):
        pts = _facet_quadrature(mesh, nids)
        normals = np.repeat(frames.normal[nids], len(SEGMENT_RULE.nodes), axis=0)
        phi = spec.neumann_flux(pts, normals).reshape(len(nids), -1)
        own = frames.owner[nids]
        dn = np.einsum("ij,ij->i", grads[own], frames.normal[nids])
        res = phi - dn[:, None]
        neumann = frames.length[nids] * ((res * res) @ SEGMENT_RULE.weights)
        neumann = sqrt_areas[own] * neumann
        np.add.at(rho, own, neumann)
    else:
        own = nids.copy()
        neumann = np.zeros(0)

    did, downer, oscD = oscillations_dirichlet(mesh, spec)
    _, _, oscN = oscillations_neumann(mesh, spec, solution)
    oscT = oscillations_element(mesh, spec, solution)

    return EstimatorBreakdown(
        rho_sq_per_element=rho,
        volume_sq_per_element=volume,
        oscT_sq_per_element=oscT,
        interior_edge_pairs=pair,
        jump_sq_per_edge=jump_split,
        dirichlet_facets=did,
        dirichlet_owner=downer,
        oscD_sq_per_facet=oscD,
        neumann_facets=nids,
        neumann_owner=own,
        neumann_sq_per_facet=neumann,
        oscN_sq_per_facet=oscN,
    )
