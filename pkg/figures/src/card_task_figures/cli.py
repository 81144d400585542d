"""Render publication-style figures from consensus-cards CSV files.

One subcommand per figure:

  fig1    failure curves per C (+ fit overlays)      --input curves [--fits report]
  fig2    tau_c collapse onto 1.75 (1/x - 1)         --input fit reports
  fig3    tau_c vs N at C = N with a linear fit      --input fit reports
  fig4    plateau failure vs C/N with 1 - C/N        --input curves [--tau T]
  fig5    failure vs beta per checkpoint time        --input curves
  table1  the pentagon individual-error grid         --input eta CSV

Exit codes: 0 success, 2 usage error, 1 bad input data.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FIGURE_IDS, FigureSpec, render_figure
from .schema import SchemaError


def _expand(paths):
    out = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            out.extend(sorted(p.glob("*.csv")))
        else:
            out.append(p)
    return tuple(str(p) for p in out)


def build_parser():
    parser = argparse.ArgumentParser(prog="card-task-figures", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="figure_id", required=True)
    for fid in FIGURE_IDS:
        p = sub.add_parser(fid)
        p.add_argument("--input", nargs="+", required=True,
                       help="CSV files (or directories of them)")
        p.add_argument("--out", required=True, help="output image path")
        if fid == "fig1":
            p.add_argument("--fits", default=None, help="fit-report CSV for overlays")
        if fid == "fig4":
            p.add_argument("--tau", type=int, default=None,
                           help="checkpoint to plot (default: latest per file)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    inputs = _expand(args.input)
    if not inputs:
        print("error: no input CSVs found", file=sys.stderr)
        return 2
    spec = FigureSpec(figure_id=args.figure_id, inputs=inputs, out=args.out,
                      fits=getattr(args, "fits", None), tau=getattr(args, "tau", None))
    try:
        render_figure(spec)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
