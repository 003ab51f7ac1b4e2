"""Render convergence CSVs as log-log figures with reference-slope guides.

This package reads only the published CSV contract of the solver CLI
(header `step,n_elements,eta_sq,...`); it knows nothing about the solver
internals.  Plotted values are taken from the files verbatim, with squared
columns rooted and nothing else applied.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

DEFAULT_QUANTITY = "eta_sq"


class SchemaError(Exception):
    """The CSV does not carry the expected run schema."""


@dataclass(frozen=True)
class Series:
    label: str
    n: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class GuideLine:
    slope: float
    n: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: labeled CSV inputs, guide slopes, output path."""

    inputs: list  # (csv path, label) pairs
    output: str | Path
    slopes: list = field(default_factory=list)
    quantity: str = DEFAULT_QUANTITY

    def __post_init__(self):
        if not self.inputs:
            raise SchemaError("at least one input series is required")
        if not all(np.isfinite(s) for s in self.slopes):
            raise SchemaError("reference slopes must be finite")


@dataclass(frozen=True)
class RenderResult:
    series: list
    guides: list
    output: Path


def load_series(path: str | Path, label: str, quantity: str = DEFAULT_QUANTITY) -> Series:
    """One (N, value) series from a run CSV; `*_sq` columns are rooted."""
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file, no CSV header")
        if "n_elements" not in reader.fieldnames:
            raise SchemaError(f"{path}: missing column 'n_elements'")
        if quantity not in reader.fieldnames:
            raise SchemaError(f"{path}: missing column '{quantity}'")
        ns, values = [], []
        for row in reader:
            cell = row[quantity]
            if cell == "" or cell is None:
                continue
            ns.append(float(row["n_elements"]))
            values.append(float(cell))
    if not ns:
        raise SchemaError(f"{path}: no data rows with values in column '{quantity}'")
    values = np.array(values)
    if quantity.endswith("_sq"):
        values = np.sqrt(values)
    return Series(label, np.array(ns), values)


def _guides(slopes, series) -> list:
    """One dashed guide per slope, anchored beside the series whose own
    log-log slope is closest, and spanning that series' N range."""
    guides = []
    for slope in slopes:
        best = None
        for s in series:
            if len(s.n) < 2 or (s.values <= 0).any():
                continue
            fitted = np.polyfit(np.log(s.n), np.log(s.values), 1)[0]
            score = abs(fitted - slope)
            if best is None or score < best[0]:
                best = (score, s)
        anchor = best[1] if best is not None else series[0]
        n = anchor.n
        ref_value = 1.5 * anchor.values[-1] * (n / n[-1]) ** slope
        guides.append(GuideLine(float(slope), n.copy(), ref_value))
    return guides


def render(spec: PlotSpec) -> RenderResult:
    """Draw the figure and return the exact data that went into it."""
    series = [load_series(path, label, spec.quantity) for path, label in spec.inputs]
    guides = _guides(spec.slopes, series)

    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    markers = ["o", "s", "^", "d", "v", "*", "x"]
    for k, s in enumerate(series):
        ax.loglog(s.n, s.values, marker=markers[k % len(markers)],
                  markersize=4, linewidth=1.2, label=s.label)
    for g in guides:
        ax.loglog(g.n, g.values, linestyle="--", linewidth=1.0, color="gray")
        ax.annotate(f"slope {g.slope:g}", (g.n[-1], g.values[-1]),
                    fontsize=8, color="gray",
                    textcoords="offset points", xytext=(4, 0))
    quantity_label = spec.quantity
    if quantity_label.endswith("_sq"):
        quantity_label = "sqrt(" + quantity_label[:-3] + ")"
    ax.set_xlabel("number of elements N")
    ax.set_ylabel(quantity_label)
    ax.grid(True, which="both", linewidth=0.3, alpha=0.5)
    ax.legend(fontsize=9)
    fig.tight_layout()
    output = Path(spec.output)
    fig.savefig(output, dpi=150, metadata={"Software": "plotkit"})
    plt.close(fig)
    return RenderResult(series, guides, output)
