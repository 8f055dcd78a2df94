#!/usr/bin/env python3
"""Regenerate every figure's data (and, if the drfigs package is installed,
the rendered images).

Paper scale takes roughly 20-30 minutes:

    python3 scripts/reproduce_figures.py --out out/paper

Desk scale for a quick look:

    python3 scripts/reproduce_figures.py --out out/small --small
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from drsim.cli import main as drsim_main
from drsim.presets import PRESET_NAMES


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/figures")
    parser.add_argument("--small", action="store_true", help="90 houses, 2 seeds, short runs")
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    out = Path(args.out)
    for preset in PRESET_NAMES:
        preset_dir = out / preset
        argv = ["preset", preset, "--out", str(preset_dir), "--jobs", str(args.jobs)]
        if args.small:
            argv += ["--houses", "90", "--seeds", "2", "--duration", "120"]
        print(f"== drsim {' '.join(argv)}")
        code = drsim_main(argv)
        if code != 0:
            return code

    try:
        from drfigs.render import render
    except ImportError:
        print("drfigs not installed; skipping image rendering", file=sys.stderr)
        return 0
    for preset in PRESET_NAMES:
        print(f"== rendering {preset}")
        for path in render(preset, out / preset, out / "images"):
            print(f"   wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
