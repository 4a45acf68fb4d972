"""Command line entry: render one figure from experiment CSV output."""
import argparse
import sys

from .figures import FIGURE_IDS, FigureSpec, render
from .schema import EmptyDataError, SchemaMismatch


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fermiplots",
        description="render figures from fermiswap experiment CSVs")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure")
    p.add_argument("--figure", required=True, choices=FIGURE_IDS)
    p.add_argument("--in", dest="inputs", nargs="+", required=True,
                   metavar="CSV", help="input CSV file(s)")
    p.add_argument("--out", required=True, help="output image (.svg or .png)")
    p.add_argument("--units", choices=("nats", "log2"), default="nats",
                   help="entropy axis units where applicable")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(figure=args.figure, inputs=tuple(args.inputs),
                          output=args.out, units=args.units)
        render(spec)
    except (SchemaMismatch, EmptyDataError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
