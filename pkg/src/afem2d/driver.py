"""The adaptive loop solve -> estimate -> mark -> refine, with bookkeeping.

Each iteration produces one convergence record; runs terminate on an element
budget or when the estimator vanishes to machine precision.  Records stream
to CSV as they are produced so partial runs remain usable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .estimator import estimate
from .fem import assemble, solve
from .marking import MARKING_STRATEGIES, MarkingParams
from .mesh import Mesh, refine, refine_uniform
from .problems import evaluate_energy_error, get_problem
from .trace import compute_trace

ETA_ZERO_TOL = 1e-12
UNIFORM_BRANCH = "uniform"
CONVERGED_BRANCH = "converged"

CSV_HEADER = ("step,n_elements,eta_sq,rho_sq,oscD_sq,oscN_sq,oscT_sq,"
              "jump_sq,volume_sq,neumann_sq,energy_error,branch,marked")


class DriverError(Exception):
    """Configuration or bookkeeping failure in the adaptive loop."""


@dataclass(frozen=True)
class ConvergenceRecord:
    step: int
    n_elements: int
    eta_sq: float
    rho_sq: float
    oscD_sq: float
    oscN_sq: float
    oscT_sq: float
    jump_sq: float
    volume_sq: float
    neumann_sq: float
    energy_error: float | None
    branch: str
    marked: int

    def csv_row(self) -> str:
        def num(x):
            return "" if x is None else f"{x:.17g}"

        return ",".join([
            str(self.step), str(self.n_elements),
            num(self.eta_sq), num(self.rho_sq), num(self.oscD_sq), num(self.oscN_sq),
            num(self.oscT_sq), num(self.jump_sq), num(self.volume_sq), num(self.neumann_sq),
            num(self.energy_error), self.branch, str(self.marked),
        ])


@dataclass(frozen=True)
class RunConfig:
    problem: str
    projection: str = "l2"
    marking: str = "doerfler-modified"
    params: MarkingParams = field(default_factory=MarkingParams)
    mode: str = "adaptive"
    max_elements: int = 20000
    output: str | Path | None = None
    energy_subdivision_depth: int = 3

    def __post_init__(self):
        if self.mode not in ("adaptive", "uniform"):
            raise DriverError(f"mode must be 'adaptive' or 'uniform', got {self.mode!r}")
        if self.marking not in MARKING_STRATEGIES:
            raise DriverError(f"unknown marking {self.marking!r}; available: {sorted(MARKING_STRATEGIES)}")


def run(config: RunConfig, observer=None) -> list[ConvergenceRecord]:
    """Execute the loop until the element budget is exceeded or eta vanishes.

    The optional observer is called as observer(step, mesh, solution,
    breakdown) after each solve, before refinement.
    """
    spec = get_problem(config.problem)
    mesh = spec.initial_mesh
    if config.max_elements < mesh.num_elements:
        raise DriverError("max_elements is below the initial element count")
    mark_strategy = MARKING_STRATEGIES[config.marking]

    records: list[ConvergenceRecord] = []
    out = None
    if config.output is not None:
        out = open(config.output, "w")
        out.write(CSV_HEADER + "\n")
        out.flush()

    def emit(record):
        records.append(record)
        if out is not None:
            out.write(record.csv_row() + "\n")
            out.flush()

    try:
        step = 0
        while mesh.num_elements <= config.max_elements:
            try:
                trace = compute_trace(config.projection, mesh, spec)
                system = assemble(mesh, spec)
                solution = solve(system, trace)
                breakdown = estimate(mesh, spec, solution)
                energy = None
                if spec.exact_solution is not None:
                    energy = evaluate_energy_error(
                        spec, mesh, solution, subdivision_depth=config.energy_subdivision_depth)
                if observer is not None:
                    observer(step, mesh, solution, breakdown)

                eta = math.sqrt(breakdown.eta_sq)
                if config.mode == "uniform":
                    branch, marked_count = UNIFORM_BRANCH, mesh.num_elements
                    next_mesh = refine_uniform(mesh)
                elif eta <= ETA_ZERO_TOL:
                    branch, marked_count = CONVERGED_BRANCH, 0
                    next_mesh = None
                else:
                    outcome = mark_strategy(breakdown, config.params)
                    branch, marked_count = outcome.branch, len(outcome.marked_elements)
                    next_mesh = refine(mesh, outcome.marked_elements)
            except Exception as exc:
                raise DriverError(f"iteration {step} failed: {exc}") from exc

            emit(ConvergenceRecord(
                step=step, n_elements=mesh.num_elements,
                eta_sq=breakdown.eta_sq, rho_sq=breakdown.rho_sq,
                oscD_sq=breakdown.oscD_sq, oscN_sq=breakdown.oscN_sq,
                oscT_sq=breakdown.oscT_sq, jump_sq=breakdown.jump_sq,
                volume_sq=breakdown.volume_sq, neumann_sq=breakdown.neumann_sq,
                energy_error=energy, branch=branch, marked=marked_count))
            if next_mesh is None:
                break
            mesh = next_mesh
            step += 1
    finally:
        if out is not None:
            out.close()
    return records


def read_records(path: str | Path) -> list[ConvergenceRecord]:
    """Parse a CSV produced by run(); the schema must match exactly."""
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise DriverError(f"{path}: missing or unexpected CSV header")
    records = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 13:
            raise DriverError(f"{path}: malformed CSV row {line!r}")
        records.append(ConvergenceRecord(
            step=int(parts[0]), n_elements=int(parts[1]),
            eta_sq=float(parts[2]), rho_sq=float(parts[3]), oscD_sq=float(parts[4]),
            oscN_sq=float(parts[5]), oscT_sq=float(parts[6]), jump_sq=float(parts[7]),
            volume_sq=float(parts[8]), neumann_sq=float(parts[9]),
            energy_error=float(parts[10]) if parts[10] else None,
            branch=parts[11], marked=int(parts[12])))
    return records


QUANTITIES = {
    "eta": ("eta_sq", True),
    "rho": ("rho_sq", True),
    "oscD": ("oscD_sq", True),
    "oscN": ("oscN_sq", True),
    "oscT": ("oscT_sq", True),
    "jump": ("jump_sq", True),
    "volume": ("volume_sq", True),
    "neumann": ("neumann_sq", True),
    "energy_error": ("energy_error", False),
}


def record_series(records, quantity: str = "eta"):
    """(element counts, values) for one quantity; squared columns are rooted."""
    try:
        column, squared = QUANTITIES[quantity]
    except KeyError:
        raise DriverError(f"unknown quantity {quantity!r}; available: {sorted(QUANTITIES)}") from None
    ns, vals = [], []
    for r in records:
        v = getattr(r, column)
        if v is None:
            continue
        ns.append(r.n_elements)
        vals.append(math.sqrt(v) if squared else v)
    return np.array(ns, dtype=float), np.array(vals, dtype=float)


def fit_rate(records, window: int, quantity: str = "eta") -> float:
    """Least-squares slope of log(value) against log(N) over the last
    `window` records."""
    ns, vals = record_series(records, quantity)
    if window < 3 or len(ns) < window:
        raise DriverError(f"rate fit needs a window of at least 3 records, got {window} of {len(ns)}")
    ns, vals = ns[-window:], vals[-window:]
    if (ns <= 0).any() or (vals <= 0).any():
        raise DriverError("rate fit needs positive element counts and values")
    slope, _ = np.polyfit(np.log(ns), np.log(vals), 1)
    return float(slope)


def fit_rate_tail(records, quantity: str = "eta") -> float:
    """Rate over the final decade of N, widened to at least 3 records."""
    ns, _ = record_series(records, quantity)
    if len(ns) < 3:
        raise DriverError("rate fit needs at least 3 records")
    in_decade = int((ns >= ns[-1] / 10.0).sum())
    return fit_rate(records, max(3, in_decade), quantity)
