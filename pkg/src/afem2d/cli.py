"""Command-line front end: run studies, compare refinement strategies,
verify mesh files.

Exit codes: 0 success, 1 usage error, 2 runtime error.  A config file given
with --config holds line-oriented `key = value` pairs that fill in any flag
not passed explicitly on the command line.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .driver import DriverError, RunConfig, fit_rate_tail, read_records, run
from .marking import MARKING_STRATEGIES, MarkingParams
from .mesh import DIRICHLET, NEUMANN, Mesh
from .problems import PROBLEMS
from .trace import TRACE_STRATEGIES


class UsageError(Exception):
    """Bad command line or config input."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="afem2d", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="execute one adaptive or uniform study")
    runp.add_argument("--problem", choices=sorted(PROBLEMS), default=None)
    runp.add_argument("--projection", choices=sorted(TRACE_STRATEGIES), default=None)
    runp.add_argument("--marking", choices=sorted(MARKING_STRATEGIES), default=None)
    runp.add_argument("--mode", choices=["adaptive", "uniform"], default=None)
    runp.add_argument("--theta1", type=float, default=None)
    runp.add_argument("--theta2", type=float, default=None)
    runp.add_argument("--vartheta", type=float, default=None)
    runp.add_argument("--max-elements", type=int, default=None)
    runp.add_argument("--out", default=None, help="CSV output path")
    runp.add_argument("--dump-mesh", default=None, help="write the final mesh in the text format")
    runp.add_argument("--config", default=None, help="key = value defaults file")

    cmp = sub.add_parser("compare", help="adaptive runs for several thetas plus a uniform run")
    cmp.add_argument("--problem", choices=sorted(PROBLEMS), required=True)
    cmp.add_argument("--thetas", default="0.25,0.125,0.0625",
                     help="comma-separated bulk parameters, used for theta1 = theta2 = vartheta")
    cmp.add_argument("--projection", choices=sorted(TRACE_STRATEGIES), default="l2")
    cmp.add_argument("--max-elements", type=int, default=20000)
    cmp.add_argument("--out-dir", default=".")

    ver = sub.add_parser("verify-mesh", help="check a mesh file against the mesh invariants")
    ver.add_argument("path")
    return parser


def _read_config(path: str) -> dict[str, str]:
    values = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line without '=': {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


_RUN_DEFAULTS = {
    "problem": "zshape2d",
    "projection": "l2",
    "marking": "doerfler-modified",
    "mode": "adaptive",
    "theta1": 0.25,
    "theta2": 0.25,
    "vartheta": 0.25,
    "max_elements": 20000,
    "out": None,
    "dump_mesh": None,
}


def _merge_run_options(args) -> dict:
    config = _read_config(args.config) if args.config else {}
    merged = {}
    for key, default in _RUN_DEFAULTS.items():
        cli_value = getattr(args, key)
        if cli_value is not None:
            merged[key] = cli_value
        elif key in config:
            raw = config[key]
            if isinstance(default, float):
                merged[key] = float(raw)
            elif isinstance(default, int):
                merged[key] = int(raw)
            else:
                merged[key] = raw
        else:
            merged[key] = default
    unknown = set(config) - set(_RUN_DEFAULTS)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return merged


def _summarize(label: str, records) -> None:
    final = records[-1]
    eta = math.sqrt(final.eta_sq)
    if final.branch == "converged" and eta <= 1e-9:
        print(f"{label}: eta = 0 (machine precision), converged at step {final.step}")
        return
    line = (f"{label}: steps {len(records)}, N {final.n_elements}, "
            f"eta {eta:.6g}")
    if final.energy_error is not None:
        line += f", energy error {final.energy_error:.6g}"
    try:
        line += f", eta rate {fit_rate_tail(records, 'eta'):+.3f}"
    except DriverError:
        pass
    print(line)


def _cmd_run(args) -> int:
    opts = _merge_run_options(args)
    config = RunConfig(
        problem=opts["problem"],
        projection=opts["projection"],
        marking=opts["marking"],
        mode=opts["mode"],
        params=MarkingParams(opts["theta1"], opts["theta2"], opts["vartheta"]),
        max_elements=opts["max_elements"],
        output=opts["out"],
    )
    final_mesh: list[Mesh] = []

    def observer(step, mesh, solution, breakdown):
        final_mesh[:] = [mesh]

    records = run(config, observer=observer)
    _summarize(f"{config.problem} {config.mode} ({config.projection})", records)
    if opts["out"]:
        print(f"wrote {len(records)} records to {opts['out']}")
    if opts["dump_mesh"]:
        final_mesh[0].write(opts["dump_mesh"])
        print(f"wrote final mesh to {opts['dump_mesh']}")
    return 0


def _cmd_compare(args) -> int:
    try:
        thetas = [float(t) for t in args.thetas.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --thetas value: {exc}") from None
    if not thetas:
        raise UsageError("--thetas must list at least one value")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    paths = []
    for theta in thetas:
        path = out_dir / f"{args.problem}-adaptive-theta{theta:g}.csv"
        config = RunConfig(problem=args.problem, projection=args.projection,
                           params=MarkingParams(theta, theta, theta),
                           max_elements=args.max_elements, output=path)
        records = run(config)
        _summarize(f"adaptive theta={theta:g}", records)
        paths.append((f"adaptive theta={theta:g}", path))
    path = out_dir / f"{args.problem}-uniform.csv"
    records = run(RunConfig(problem=args.problem, mode="uniform",
                            max_elements=args.max_elements, output=path))
    _summarize("uniform", records)
    paths.append(("uniform", path))

    # the table is recomputed from the CSV files alone
    quantities = ["eta", "rho", "jump", "neumann", "oscD"]
    print()
    print(f"{'run':>22} {'N':>8} " + " ".join(f"{q:>9}" for q in quantities))
    for label, p in paths:
        records = read_records(p)
        cells = []
        for q in quantities:
            try:
                cells.append(f"{fit_rate_tail(records, q):>+9.3f}")
            except DriverError:
                cells.append(f"{'-':>9}")
        print(f"{label:>22} {records[-1].n_elements:>8} " + " ".join(cells))
    print(f"\nwrote {len(paths)} CSV files to {out_dir}")
    return 0


def _cmd_verify_mesh(args) -> int:
    mesh = Mesh.read(args.path)
    problems = mesh.invariant_violations()
    if problems:
        for p in problems:
            print(f"violation: {p}", file=sys.stderr)
        return 2
    print(f"OK: {mesh.num_vertices} vertices, {mesh.num_elements} elements, "
          f"boundary length D={mesh.boundary_length(DIRICHLET):.6g} "
          f"N={mesh.boundary_length(NEUMANN):.6g}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "compare":
            return _cmd_compare(args)
        return _cmd_verify_mesh(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
