"""plots: turn one experiment CSV into one line chart.

Exit codes: 0 chart written, 2 bad usage or unusable table.
"""

import argparse
import sys
from typing import Optional, Sequence

import matplotlib.pyplot as plt

from .render import DataError, PlotJob, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render experiment CSV tables to line charts."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render", help="draw one chart from one CSV")
    r.add_argument("--in", dest="source", required=True, help="input CSV table")
    r.add_argument("--x", default="param_value", help="x-axis column")
    r.add_argument("--group", default="policy", help="one curve per value of this column")
    r.add_argument("--y", default="mean", help="y-axis column")
    r.add_argument("--err", default="stderr", help="error column; bars span +/- 2x")
    r.add_argument("--out", required=True, help="output image path")
    r.add_argument("--logy", action="store_true", help="logarithmic y axis")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    job = PlotJob(args.source, args.x, args.group, args.y, args.err, args.out, args.logy)
    try:
        fig = render(job)
    except (DataError, OSError) as exc:
        print(f"plots: {exc}", file=sys.stderr)
        return 2
    plt.close(fig)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
