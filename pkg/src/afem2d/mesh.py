"""Conforming 2D triangulations with newest-vertex-bisection refinement.

Elements are stored as vertex-index triples; the edge between the first two
listed vertices of an element is its refinement edge.  Bisection inserts the
midpoint of that edge as the *last* vertex of both children, so that each
child's refinement edge is again the edge opposite the newly created vertex.
Refining only ever bisects refinement edges, which keeps the number of
similarity classes produced by any initial element bounded (at most 4 in 2D).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

DIRICHLET = "D"
NEUMANN = "N"


class MeshError(Exception):
    """Invalid mesh topology, geometry, or input data."""


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Mesh:
    """Immutable conforming triangulation with labeled boundary facets.

    vertices        (nv, 2) float coordinates
    elements        (ne, 3) vertex indices, counterclockwise; refinement edge
                    is between the first two listed vertices
    boundary_facets (nb, 2) vertex pairs covering the whole boundary
    boundary_labels (nb,)   one of DIRICHLET / NEUMANN per facet
    generation      (ne,)   bisection depth of each element
    parent          (ne,)   index into the previous mesh's elements, or None
                    for meshes not produced by refinement
    """

    vertices: np.ndarray
    elements: np.ndarray
    boundary_facets: np.ndarray
    boundary_labels: np.ndarray
    generation: np.ndarray = field(default=None)
    parent: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", _as_readonly(np.asarray(self.vertices, dtype=np.float64)))
        object.__setattr__(self, "elements", _as_readonly(np.asarray(self.elements, dtype=np.int64)))
        object.__setattr__(self, "boundary_facets", _as_readonly(np.asarray(self.boundary_facets, dtype=np.int64)))
        object.__setattr__(self, "boundary_labels", _as_readonly(np.asarray(self.boundary_labels, dtype="U1")))
        gen = self.generation
        if gen is None:
            gen = np.zeros(len(self.elements), dtype=np.int64)
        object.__setattr__(self, "generation", _as_readonly(np.asarray(gen, dtype=np.int64)))
        if self.parent is not None:
            object.__setattr__(self, "parent", _as_readonly(np.asarray(self.parent, dtype=np.int64)))
        if self.elements.ndim != 2 or self.elements.shape[1] != 3:
            raise MeshError("elements must be an (ne, 3) index array")
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise MeshError("vertices must be an (nv, 2) coordinate array")
        if len(self.elements) and self.elements.max() >= len(self.vertices):
            raise MeshError("element refers to a vertex that does not exist")
        if len(self.elements) and (self.element_areas() <= 0.0).any():
            raise MeshError("elements must be positively oriented and non-degenerate")

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_elements(self) -> int:
        return len(self.elements)

    @cached_property
    def _edge_data(self):
        """Unique undirected edges and the per-element edge incidence.

        Returns (edges, elem_edges) where edges is (E, 2) with sorted vertex
        pairs in lexicographic order and elem_edges is (ne, 3) with the edge
        ids of the local edges (v0,v1), (v1,v2), (v2,v0).
        """
        t = self.elements
        pairs = np.stack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=1).reshape(-1, 2)
        lo = pairs.min(axis=1)
        hi = pairs.max(axis=1)
        keys = lo * np.int64(self.num_vertices) + hi
        unique_keys, inverse = np.unique(keys, return_inverse=True)
        edges = np.stack([unique_keys // self.num_vertices, unique_keys % self.num_vertices], axis=1)
        return edges, inverse.reshape(-1, 3)

    @property
    def edges(self) -> np.ndarray:
        return self._edge_data[0]

    @property
    def element_edges(self) -> np.ndarray:
        return self._edge_data[1]

    def edge_ids(self, pairs: np.ndarray) -> np.ndarray:
        """Edge ids of the given (n, 2) vertex pairs; raises if absent."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        keys = pairs.min(axis=1) * np.int64(self.num_vertices) + pairs.max(axis=1)
        edges = self.edges
        edge_keys = edges[:, 0] * np.int64(self.num_vertices) + edges[:, 1]
        idx = np.searchsorted(edge_keys, keys)
        if (idx >= len(edge_keys)).any() or (edge_keys[np.clip(idx, 0, len(edge_keys) - 1)] != keys).any():
            raise MeshError("vertex pair is not an edge of the mesh")
        return idx

    def element_areas(self) -> np.ndarray:
        p = self.vertices[self.elements]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def boundary_lengths(self) -> np.ndarray:
        d = self.vertices[self.boundary_facets[:, 1]] - self.vertices[self.boundary_facets[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def boundary_length(self, label: str) -> float:
        return float(self.boundary_lengths()[self.boundary_labels == label].sum())

    def facets_with_label(self, label: str) -> np.ndarray:
        return np.flatnonzero(self.boundary_labels == label)

    def invariant_violations(self) -> list[str]:
        """All detected invariant violations, empty when the mesh is valid."""
        problems = []
        areas = self.element_areas()
        if (areas <= 0).any():
            bad = np.flatnonzero(areas <= 0)
            problems.append(f"non-positively-oriented or degenerate elements: {bad.tolist()[:10]}")
        edges, elem_edges = self._edge_data
        counts = np.bincount(elem_edges.reshape(-1), minlength=len(edges))
        if (counts > 2).any():
            problems.append("edge shared by more than two elements")
        boundary_ids = np.flatnonzero(counts == 1)
        try:
            facet_ids = self.edge_ids(self.boundary_facets)
        except MeshError:
            problems.append("boundary facet is not an edge of any element")
            return problems
        if len(np.unique(facet_ids)) != len(facet_ids):
            problems.append("duplicate boundary facet")
        if set(facet_ids.tolist()) != set(boundary_ids.tolist()):
            problems.append("boundary_facets do not match the topological boundary")
        unknown = set(np.unique(self.boundary_labels)) - {DIRICHLET, NEUMANN}
        if unknown:
            problems.append(f"unknown boundary labels: {sorted(unknown)}")
        # Conformity of hanging-node type is implied by the edge counts: a
        # hanging node would make the coarse edge appear only once yet not
        # be listed as boundary, which the set comparison above detects.
        return problems

    def check(self):
        problems = self.invariant_violations()
        if problems:
            raise MeshError("; ".join(problems))

    # -- text format --------------------------------------------------------

    def write(self, path: str | Path):
        path = Path(path)
        lines = ["dim 2", f"vertices {self.num_vertices}"]
        lines += [f"{x:.17g} {y:.17g}" for x, y in self.vertices]
        lines.append(f"elements {self.num_elements}")
        lines += [f"{a} {b} {c}" for a, b, c in self.elements]
        lines.append(f"boundary {len(self.boundary_facets)}")
        lines += [
            f"{a} {b} {lab}"
            for (a, b), lab in zip(self.boundary_facets, self.boundary_labels)
        ]
        path.write_text("\n".join(lines) + "\n")

    @classmethod
    def read(cls, path: str | Path) -> "Mesh":
        tokens = Path(path).read_text().split()
        pos = 0

        def take(n):
            nonlocal pos
            out = tokens[pos:pos + n]
            if len(out) != n:
                raise MeshError(f"truncated mesh file {path}")
            pos += n
            return out

        if take(2) != ["dim", "2"]:
            raise MeshError("mesh file must start with 'dim 2'")
        kw, n = take(2)
        if kw != "vertices":
            raise MeshError("expected 'vertices N'")
        nv = int(n)
        vertices = np.array([[float(v) for v in take(2)] for _ in range(nv)], dtype=np.float64).reshape(nv, 2)
        kw, n = take(2)
        if kw != "elements":
            raise MeshError("expected 'elements M'")
        ne = int(n)
        elements = np.array([[int(v) for v in take(3)] for _ in range(ne)], dtype=np.int64).reshape(ne, 3)
        kw, n = take(2)
        if kw != "boundary":
            raise MeshError("expected 'boundary K'")
        nb = int(n)
        facets = np.empty((nb, 2), dtype=np.int64)
        labels = np.empty(nb, dtype="U1")
        for i in range(nb):
            a, b, lab = take(3)
            facets[i] = (int(a), int(b))
            labels[i] = lab
        if pos != len(tokens):
            raise MeshError("trailing data in mesh file")
        return cls(vertices, elements, facets, labels)


def seed_refinement_edges(vertices: np.ndarray, elements: np.ndarray) -> np.ndarray:
    """Rotate each element so its longest edge comes first.

    Ties are broken by the smallest sorted vertex-index pair, which makes the
    seeding deterministic under vertex renumbering of equal-length edges.
    """
    vertices = np.asarray(vertices, dtype=np.float64)
    elements = np.asarray(elements, dtype=np.int64)
    out = elements.copy()
    for k, (a, b, c) in enumerate(elements):
        candidates = []
        for shift, (i, j) in enumerate(((a, b), (b, c), (c, a))):
            length = np.hypot(*(vertices[j] - vertices[i]))
            candidates.append((-length, min(i, j), max(i, j), shift))
        shift = min(candidates)[3]
        out[k] = np.roll(elements[k], -shift)
    return out


def _marked_edge_closure(mesh: Mesh, marked_elements: np.ndarray) -> np.ndarray:
    """Fixed point of edge marking: start from the refinement edges of the
    marked elements; any element with a marked edge must also have its
    refinement edge marked."""
    edges, elem_edges = mesh._edge_data
    ref_edge = elem_edges[:, 0]
    marked = np.zeros(len(edges), dtype=bool)
    marked[ref_edge[marked_elements]] = True
    while True:
        need = marked[elem_edges].any(axis=1) & ~marked[ref_edge]
        if not need.any():
            return marked
        marked[ref_edge[need]] = True


def _split_elements(mesh: Mesh, marked_edge: np.ndarray) -> Mesh:
    """Bisect every element once per marked edge and rebuild the mesh."""
    edges, elem_edges = mesh._edge_data
    nv = mesh.num_vertices

    new_ids = np.full(len(edges), -1, dtype=np.int64)
    marked_ids = np.flatnonzero(marked_edge)
    new_ids[marked_ids] = nv + np.arange(len(marked_ids))
    midpoints = 0.5 * (mesh.vertices[edges[marked_ids, 0]] + mesh.vertices[edges[marked_ids, 1]])
    vertices = np.vstack([mesh.vertices, midpoints])

    m = new_ids[elem_edges]  # (ne, 3) midpoint index or -1 per local edge
    has = m >= 0
    if (has[:, 1:].any(axis=1) & ~has[:, 0]).any():
        raise MeshError("closure failed: non-refinement edge marked alone")

    counts = 1 + has.sum(axis=1)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    total = offsets[-1]
    children = np.empty((total, 3), dtype=np.int64)
    generation = np.empty(total, dtype=np.int64)
    parent = np.repeat(np.arange(mesh.num_elements), counts)

    z1, z2, z3 = mesh.elements[:, 0], mesh.elements[:, 1], mesh.elements[:, 2]
    m0, m1, m2 = m[:, 0], m[:, 1], m[:, 2]
    gen = mesh.generation

    def put(mask, slot, tri, depth):
        rows = offsets[:-1][mask] + slot
        children[rows] = np.stack([t[mask] for t in tri], axis=1)
        generation[rows] = gen[mask] + depth

    none = ~has[:, 0]
    only0 = has[:, 0] & ~has[:, 1] & ~has[:, 2]
    with1 = has[:, 0] & has[:, 1] & ~has[:, 2]
    with2 = has[:, 0] & ~has[:, 1] & has[:, 2]
    both = has[:, 0] & has[:, 1] & has[:, 2]

    put(none, 0, (z1, z2, z3), 0)
    # first bisection of (z1,z2,z3) at m0 yields (z3,z1,m0) and (z2,z3,m0);
    # a marked edge 2 resp. 1 bisects the first resp. second child again
    put(only0, 0, (z3, z1, m0), 1)
    put(only0, 1, (z2, z3, m0), 1)
    put(with1, 0, (z3, z1, m0), 1)
    put(with1, 1, (m0, z2, m1), 2)
    put(with1, 2, (z3, m0, m1), 2)
    put(with2, 0, (m0, z3, m2), 2)
    put(with2, 1, (z1, m0, m2), 2)
    put(with2, 2, (z2, z3, m0), 1)
    put(both, 0, (m0, z3, m2), 2)
    put(both, 1, (z1, m0, m2), 2)
    put(both, 2, (m0, z2, m1), 2)
    put(both, 3, (z3, m0, m1), 2)

    facet_ids = mesh.edge_ids(mesh.boundary_facets)
    facets, labels = [], []
    for (a, b), lab, eid in zip(mesh.boundary_facets, mesh.boundary_labels, facet_ids):
        if marked_edge[eid]:
            mid = new_ids[eid]
            facets += [(a, mid), (mid, b)]
            labels += [lab, lab]
        else:
            facets.append((a, b))
            labels.append(lab)

    return Mesh(vertices, children, np.array(facets, dtype=np.int64),
                np.array(labels, dtype="U1"), generation, parent)


def refine(mesh: Mesh, marked_elements) -> Mesh:
    """Coarsest conforming refinement bisecting every marked element at least once."""
    marked = np.asarray(sorted(set(int(i) for i in marked_elements)), dtype=np.int64)
    if len(marked) == 0:
        return mesh
    if marked.min() < 0 or marked.max() >= mesh.num_elements:
        raise MeshError(f"marked element index out of range 0..{mesh.num_elements - 1}")
    return _split_elements(mesh, _marked_edge_closure(mesh, marked))


def refine_uniform(mesh: Mesh) -> Mesh:
    """Quarter every element (two bisection levels; all edges get midpoints)."""
    return _split_elements(mesh, np.ones(len(mesh.edges), dtype=bool))


def interior_edges(mesh: Mesh) -> list[tuple[tuple[int, int], int, int]]:
    """Each interior edge once as (vertex pair, left element, right element)."""
    edges, elem_edges = mesh._edge_data
    eids = elem_edges.reshape(-1)
    elems = np.repeat(np.arange(mesh.num_elements), 3)
    order = np.argsort(eids, kind="stable")
    eids, elems = eids[order], elems[order]
    out = []
    k = 0
    while k < len(eids):
        if k + 1 < len(eids) and eids[k + 1] == eids[k]:
            a, b = edges[eids[k]]
            out.append(((int(a), int(b)), int(elems[k]), int(elems[k + 1])))
            k += 2
        else:
            k += 1
    return out


def element_size(mesh: Mesh, t: int) -> float:
    """Area of element t; the local mesh width is its square root in 2D."""
    if not 0 <= t < mesh.num_elements:
        raise MeshError(f"element index {t} out of range")
    return float(mesh.element_areas()[t])


@dataclass(frozen=True)
class BoundaryFrames:
    """Per-boundary-facet geometry, aligned with mesh.boundary_facets."""

    owner: np.ndarray    # (nb,) owning element index
    tangent: np.ndarray  # (nb, 2) unit tangent from first to second vertex
    normal: np.ndarray   # (nb, 2) outward unit normal
    length: np.ndarray   # (nb,)


def boundary_frames(mesh: Mesh) -> BoundaryFrames:
    edges, elem_edges = mesh._edge_data
    facet_ids = mesh.edge_ids(mesh.boundary_facets)
    owner_of_edge = np.full(len(edges), -1, dtype=np.int64)
    # later occurrences overwrite, but boundary edges occur exactly once
    flat = elem_edges.reshape(-1)
    owner_of_edge[flat] = np.repeat(np.arange(mesh.num_elements), 3)
    counts = np.bincount(flat, minlength=len(edges))
    if (counts[facet_ids] != 1).any():
        raise MeshError("boundary facet not on the topological boundary")
    owner = owner_of_edge[facet_ids]

    a = mesh.vertices[mesh.boundary_facets[:, 0]]
    b = mesh.vertices[mesh.boundary_facets[:, 1]]
    d = b - a
    length = np.hypot(d[:, 0], d[:, 1])
    tangent = d / length[:, None]
    normal = np.stack([tangent[:, 1], -tangent[:, 0]], axis=1)
    # orient outward: away from the owning element's centroid
    centroid = mesh.vertices[mesh.elements[owner]].mean(axis=1)
    mid = 0.5 * (a + b)
    flip = np.einsum("ij,ij->i", normal, mid - centroid) < 0
    normal[flip] *= -1.0
    return BoundaryFrames(owner, tangent, normal, length)
