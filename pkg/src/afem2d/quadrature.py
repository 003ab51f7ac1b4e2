"""Fixed Gauss quadrature on segments and triangles, exact to degree 5.

Weights are stored relative to the measure of the element (they sum to 1),
so an integral is the weighted node sum times segment length resp. area.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class QuadratureError(Exception):
    """Evaluation failure at a quadrature node."""


@dataclass(frozen=True)
class SegmentRule:
    """Nodes in [0, 1] with positive weights summing to 1."""

    nodes: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class TriangleRule:
    """Barycentric nodes with positive weights summing to 1."""

    nodes: np.ndarray  # (n, 3)
    weights: np.ndarray


def _gauss_segment_3() -> SegmentRule:
    s = np.sqrt(0.6)
    nodes = 0.5 * (1.0 + np.array([-s, 0.0, s]))
    weights = np.array([5.0, 8.0, 5.0]) / 18.0
    return SegmentRule(nodes, weights)


def _triangle_7point() -> TriangleRule:
    # Radon's 7-point rule: centroid plus two symmetric orbits.
    s = np.sqrt(15.0)
    b1 = (6.0 - s) / 21.0
    b2 = (6.0 + s) / 21.0
    w1 = (155.0 - s) / 1200.0
    w2 = (155.0 + s) / 1200.0
    nodes = [[1 / 3, 1 / 3, 1 / 3]]
    weights = [9.0 / 40.0]
    for b, w in ((b1, w1), (b2, w2)):
        a = 1.0 - 2.0 * b
        nodes += [[a, b, b], [b, a, b], [b, b, a]]
        weights += [w, w, w]
    return TriangleRule(np.array(nodes), np.array(weights))


SEGMENT_RULE = _gauss_segment_3()
TRIANGLE_RULE = _triangle_7point()


def segment_points(rule: SegmentRule, a, b) -> np.ndarray:
    """Physical quadrature points on the segment from a to b, shape (n, 2)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[None, :] + rule.nodes[:, None] * (b - a)[None, :]


def triangle_points(rule: TriangleRule, tri) -> np.ndarray:
    """Physical quadrature points in the triangle (3, 2) -> (n, 2)."""
    return rule.nodes @ np.asarray(tri, dtype=float)


def _checked(values: np.ndarray, points: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if not np.isfinite(values).all():
        bad = points[~np.isfinite(values)][0]
        raise QuadratureError(f"non-finite integrand value at point ({bad[0]}, {bad[1]})")
    return values


def integrate_segment(rule: SegmentRule, f, a, b) -> float:
    """Integral of f over the segment [a, b]; f maps (n, 2) points to (n,)."""
    pts = segment_points(rule, a, b)
    length = float(np.hypot(*(np.asarray(b, dtype=float) - np.asarray(a, dtype=float))))
    return float(rule.weights @ _checked(f(pts), pts)) * length


def integrate_triangle(rule: TriangleRule, f, tri) -> float:
    """Integral of f over the triangle with vertex rows tri (3, 2)."""
    tri = np.asarray(tri, dtype=float)
    pts = triangle_points(rule, tri)
    d1, d2 = tri[1] - tri[0], tri[2] - tri[0]
    area = 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])
    return float(rule.weights @ _checked(f(pts), pts)) * area


def integrate_triangle_subdivided(rule: TriangleRule, f, tri, near, depth: int = 3) -> float:
    """Integral over tri with local quartering near the point `near`.

    A triangle touching `near` is split into four by its edge midpoints and
    the children are integrated recursively up to the given depth; the child
    still touching the point keeps getting subdivided.  Used for integrands
    with an (integrable) gradient singularity at a mesh vertex.
    """
    tri = np.asarray(tri, dtype=float)
    near = np.asarray(near, dtype=float)
    touches = np.min(np.hypot(*(tri - near).T)) < 1e-12
    if depth <= 0 or not touches:
        return integrate_triangle(rule, f, tri)
    m01 = 0.5 * (tri[0] + tri[1])
    m12 = 0.5 * (tri[1] + tri[2])
    m20 = 0.5 * (tri[2] + tri[0])
    children = (
        np.array([tri[0], m01, m20]),
        np.array([m01, tri[1], m12]),
        np.array([m20, m12, tri[2]]),
        np.array([m01, m12, m20]),
    )
    return sum(integrate_triangle_subdivided(rule, f, c, near, depth - 1) for c in children)
