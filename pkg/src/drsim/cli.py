"""Command-line scenario runner.

Subcommands:
  run      one scenario from a config file, CSVs + manifest into --out
  preset   regenerate a figure's data (fig6..fig11), optionally downscaled
  validate parse + validate a config file without running it
"""

from __future__ import annotations

import argparse
import json
import multiprocessing
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import ConfigError, config_to_flat, load_config
from .engine import Simulation
from .presets import (
    DEFAULT_DURATION_S,
    DEFAULT_HOUSES,
    DEFAULT_SEEDS,
    PRESET_NAMES,
    execute_run,
    scenario_runs,
    write_delay_csv,
    write_overload_csvs,
    write_throughput_csv,
)


def _write_manifest(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    cfg.validate()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sim = Simulation(cfg)
    sim.frame.write_csv(out / "frame.csv")
    log = sim.run()
    written = log.write_csvs(out, bin_w=cfg.histogram_bin_w)
    written.append(out / "frame.csv")
    _write_manifest(
        out / "manifest.json",
        {
            "version": __version__,
            "seed": cfg.seed,
            "config": config_to_flat(cfg),
            "outputs": sorted(p.name for p in written),
        },
    )
    return 0


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    cfg.validate()
    print(f"{args.config}: ok")
    return 0


def _preset_worker(payload):
    item, out_root = payload
    return execute_run(item, Path(out_root))


def _cmd_preset(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    runs = scenario_runs(
        args.name, seeds=args.seeds, n_houses=args.houses, duration_s=args.duration
    )
    outputs: list[str] = []
    if args.name == "fig6":
        write_throughput_csv(out / "throughput_vs_d.csv", seed=0)
        outputs.append("throughput_vs_d.csv")
    elif args.name == "fig7":
        counts = [n for n in (100, 500, 1000, 2000, 5000) if n <= args.houses] or [args.houses]
        write_delay_csv(out / "delay_vs_n.csv", house_counts=counts)
        outputs.append("delay_vs_n.csv")
    if runs:
        if args.jobs > 1:
            with multiprocessing.Pool(args.jobs) as pool:
                results = pool.map(_preset_worker, [(r, str(out)) for r in runs])
        else:
            results = [execute_run(r, out) for r in runs]
        results.sort(key=lambda r: r["name"])
        write_overload_csvs(out, results)
        outputs += ["overload_by_seed.csv", "overload_summary.csv"]
        outputs += [f"runs/{r['name']}" for r in results]
    _write_manifest(
        out / "manifest.json",
        {
            "version": __version__,
            "preset": args.name,
            "seeds": args.seeds,
            "n_houses": args.houses,
            "duration_s": args.duration,
            "outputs": sorted(outputs),
        },
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drsim",
        description="Hierarchical demand-response power control simulator",
    )
    parser.add_argument("--version", action="version", version=f"drsim {__version__}")
    default_out = os.environ.get("DRSIM_OUT", "out")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--out", default=default_out)
    p_run.set_defaults(func=_cmd_run)

    p_preset = sub.add_parser("preset", help="regenerate a figure's data")
    p_preset.add_argument("name", choices=PRESET_NAMES)
    p_preset.add_argument("--out", default=default_out)
    p_preset.add_argument("--seeds", type=int, default=DEFAULT_SEEDS)
    p_preset.add_argument("--houses", type=int, default=DEFAULT_HOUSES)
    p_preset.add_argument("--duration", type=float, default=DEFAULT_DURATION_S)
    p_preset.add_argument("--jobs", type=int, default=1)
    p_preset.set_defaults(func=_cmd_preset)

    p_val = sub.add_parser("validate", help="check a config file")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"drsim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
