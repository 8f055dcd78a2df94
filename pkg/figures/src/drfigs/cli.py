"""drfigs render --fig <fig6..fig11|all> --in <preset dir> --out <image dir>"""

from __future__ import annotations

import argparse
import sys

from .render import FIGURES, RenderError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drfigs")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from simulator CSVs")
    p.add_argument("--fig", required=True, choices=(*FIGURES, "all"))
    p.add_argument("--in", dest="in_dir", required=True, help="preset output directory")
    p.add_argument("--out", dest="out_dir", required=True, help="image directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    figures = FIGURES if args.fig == "all" else (args.fig,)
    try:
        for fig in figures:
            for path in render(fig, args.in_dir, args.out_dir):
                print(path)
    except RenderError as exc:
        print(f"drfigs: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
