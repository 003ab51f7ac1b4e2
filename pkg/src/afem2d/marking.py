"""Bulk marking of elements or Dirichlet facets for refinement.

The modified rule marks elements by their residual indicators as long as the
Dirichlet oscillations are small relative to them, and otherwise marks
Dirichlet facets (and thereby their owner elements).  Marked sets have
minimal cardinality: indicators are taken greedily in descending order, with
ties broken by ascending index, until the requested fraction of the total is
reached.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .estimator import EstimatorBreakdown

ELEMENT_BRANCH = "element"
DIRICHLET_BRANCH = "dirichlet"


class MarkingError(Exception):
    """Marking called with unusable indicator data."""


@dataclass(frozen=True)
class MarkingParams:
    """Bulk fractions theta1 (elements), theta2 (facets) and the branch
    switch vartheta, all strictly inside (0, 1)."""

    theta1: float = 0.25
    theta2: float = 0.25
    vartheta: float = 0.25

    def __post_init__(self):
        for name in ("theta1", "theta2", "vartheta"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise MarkingError(f"{name} must lie strictly inside (0, 1), got {v}")


@dataclass(frozen=True)
class MarkingOutcome:
    branch: str
    marked_elements: np.ndarray
    marked_dirichlet_facets: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))


def doerfler_set(values: np.ndarray, theta: float) -> np.ndarray:
    """Minimum-cardinality index set whose sum reaches theta times the total.

    Greedy by descending value with ascending-index tie-breaking; the
    non-strict inequality keeps a value that lands exactly on the threshold
    inside the set.
    """
    values = np.asarray(values, dtype=float)
    total = values.sum()
    if not total > 0.0:
        raise MarkingError("all indicators vanish; nothing to mark")
    order = np.lexsort((np.arange(len(values)), -values))
    csum = np.cumsum(values[order])
    k = int(np.searchsorted(csum, theta * total, side="left"))
    k = min(k, len(values) - 1)
    return np.sort(order[:k + 1])


def mark(breakdown: EstimatorBreakdown, params: MarkingParams) -> MarkingOutcome:
    """Two-branch bulk marking on an estimator breakdown.

    Elements are marked when oscD^2 <= vartheta * rho^2, Dirichlet facets
    otherwise; in the facet branch the marked elements are exactly the
    owners of the marked facets.
    """
    rho_sq = breakdown.rho_sq
    oscd_sq = breakdown.oscD_sq
    if rho_sq <= 0.0 and oscd_sq <= 0.0:
        raise MarkingError("estimator vanishes; the adaptive loop should have stopped")
    if oscd_sq <= params.vartheta * rho_sq:
        marked = doerfler_set(breakdown.rho_sq_per_element, params.theta1)
        return MarkingOutcome(ELEMENT_BRANCH, marked)
    chosen = doerfler_set(breakdown.oscD_sq_per_facet, params.theta2)
    facets = breakdown.dirichlet_facets[chosen]
    owners = np.unique(breakdown.dirichlet_owner[chosen])
    return MarkingOutcome(DIRICHLET_BRANCH, owners, facets)


def mark_simple(breakdown: EstimatorBreakdown, params: MarkingParams) -> MarkingOutcome:
    """Plain bulk marking on the elementwise localized estimator, which folds
    each facet's Dirichlet oscillations into its owner element."""
    local = breakdown.eta_local_sq_per_element()
    if not local.sum() > 0.0:
        raise MarkingError("estimator vanishes; the adaptive loop should have stopped")
    marked = doerfler_set(local, params.theta1)
    return MarkingOutcome(ELEMENT_BRANCH, marked)


MARKING_STRATEGIES = {
    "doerfler-modified": mark,
    "doerfler-simple": mark_simple,
}
