"""Command line for rendering nc-lab CSVs into figures.

Exit codes: 0 success, 2 usage or schema error (the message names the
missing column).
"""

from __future__ import annotations

import argparse
import sys

from .data import SchemaError
from .render import KINDS, PlotJob, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ncplots", description="Render nc-lab CSV outputs as figures"
    )
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("input", help="input CSV path")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--title", default="")
    parser.add_argument("--column", default="loss_mse", help="heatmap surface")
    parser.add_argument("--field", default="mse", choices=("mse", "ce"),
                        help="quiver gradient field")
    parser.add_argument("--series", default="nc1,nc2,nc3",
                        help="comma-separated trace/sweep curves")
    parser.add_argument("--linear-y", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return 0 if err.code in (0, None) else 2
    job = PlotJob(
        input_path=args.input,
        kind=args.kind,
        output_path=args.out,
        title=args.title,
        column=args.column,
        field=args.field,
        series=tuple(s for s in args.series.split(",") if s),
        log_y=not args.linear_y,
    )
    try:
        render(job)
    except (SchemaError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
