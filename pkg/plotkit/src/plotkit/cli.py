"""CLI: `plot --out fig.png --slope -0.5 run_a.csv:label_a run_b.csv:label_b`.

Exit codes: 0 success, 1 usage error, 2 schema or runtime error.
"""

from __future__ import annotations

import argparse
import sys

from .core import DEFAULT_QUANTITY, PlotSpec, SchemaError, render


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_inputs(raw):
    inputs = []
    for item in raw:
        path, sep, label = item.partition(":")
        if not path:
            raise UsageError(f"bad input {item!r}; expected path.csv[:label]")
        inputs.append((path, label if sep else path))
    return inputs


def main(argv=None) -> int:
    parser = _Parser(prog="plot", description=__doc__)
    parser.add_argument("inputs", nargs="+", metavar="CSV[:LABEL]")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--slope", type=float, action="append", default=[],
                        help="reference slope for a dashed guide line (repeatable)")
    parser.add_argument("--quantity", default=DEFAULT_QUANTITY,
                        help="CSV column to plot; *_sq columns are rooted")
    try:
        args = parser.parse_args(argv)
        spec = PlotSpec(inputs=_parse_inputs(args.inputs), output=args.out,
                        slopes=args.slope, quantity=args.quantity)
        result = render(spec)
        print(f"wrote {result.output} ({len(result.series)} series, {len(result.guides)} guides)")
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
