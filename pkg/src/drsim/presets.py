"""Scenario presets that regenerate the data behind each figure.

Every preset resolves to one or more ScenarioConfig runs (plus link-level
sweeps for the throughput/delay figures) and writes per-run CSVs under
runs/<name>/ together with aggregate CSVs at the preset root.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

from .config import ScenarioConfig
from .engine import measure_control_delay, run, throughput_sweep
from .tdma import CENTRALIZED, CENTRALIZED_2HOP, DISTRIBUTED

PRESET_NAMES = ("fig6", "fig7", "fig8", "fig9", "fig10", "fig11")

DEFAULT_SEEDS = 10
DEFAULT_HOUSES = 5000
DEFAULT_DURATION_S = 3600.0

THROUGHPUT_DISTANCES = [25.0 * i for i in range(1, 81)]  # 25 m .. 2 km
DELAY_HOUSE_COUNTS = (100, 500, 1000, 2000, 5000)
TARGET_CLUSTER_HOUSES = 500


@dataclass(frozen=True)
class PresetRun:
    name: str
    cfg: ScenarioConfig


def _min_duration(cfg: ScenarioConfig, wanted_s: float) -> float:
    return max(wanted_s, 10.0 * cfg.period_s())


def _scenario(
    topology: str,
    n_houses: int,
    n_clusters: int,
    seed: int,
    duration_s: float,
    **kw,
) -> ScenarioConfig:
    cfg = ScenarioConfig(
        n_houses=n_houses,
        duration_s=duration_s,
        seed=seed,
        topology=topology,
        n_clusters=n_clusters,
        **kw,
    )
    return replace(cfg, duration_s=_min_duration(cfg, duration_s))


def _run_name(cfg: ScenarioConfig) -> str:
    return f"{cfg.topology}_n{cfg.n_houses}_c{cfg.n_clusters}_s{cfg.seed}"


def scenario_runs(
    preset: str,
    seeds: int = DEFAULT_SEEDS,
    n_houses: int = DEFAULT_HOUSES,
    duration_s: float = DEFAULT_DURATION_S,
) -> list[PresetRun]:
    """Engine runs composing a preset (fig6/fig7 have none; they are sweeps)."""
    if preset not in PRESET_NAMES:
        raise ValueError(f"unknown preset {preset!r}")
    seed_list = list(range(seeds))
    runs: list[PresetRun] = []
    if preset == "fig8":
        for topology in (CENTRALIZED, CENTRALIZED_2HOP):
            for n in sorted({min(500, n_houses), n_houses}):
                for seed in seed_list:
                    cfg = _scenario(topology, n, 1, seed, duration_s)
                    runs.append(PresetRun(_run_name(cfg), cfg))
    elif preset == "fig9":
        clusters = _cluster_count(n_houses, TARGET_CLUSTER_HOUSES)
        for seed in seed_list:
            cfg = _scenario(DISTRIBUTED, n_houses, clusters, seed, duration_s)
            runs.append(PresetRun(_run_name(cfg), cfg))
    elif preset == "fig10":
        for clusters in (4, 9):
            for seed in seed_list:
                cfg = _scenario(DISTRIBUTED, n_houses, clusters, seed, duration_s)
                runs.append(PresetRun(_run_name(cfg), cfg))
    elif preset == "fig11":
        cent = _scenario(CENTRALIZED, n_houses, 1, seed_list[0], duration_s)
        dist = _scenario(
            DISTRIBUTED, n_houses, _cluster_count(n_houses, TARGET_CLUSTER_HOUSES),
            seed_list[0], duration_s,
        )
        runs = [PresetRun(_run_name(cent), cent), PresetRun(_run_name(dist), dist)]
    # fig6 / fig7 produce sweep CSVs only.
    seen = set()
    for r in runs:
        if r.name in seen:
            raise ValueError(f"duplicate preset run {r.name}")
        seen.add(r.name)
    return runs


def _cluster_count(n_houses: int, houses_per_cluster: int) -> int:
    return max(1, -(-n_houses // houses_per_cluster))


def write_throughput_csv(
    path: Path, seed: int = 0, distances=None, n_slots: int = 50_000
) -> None:
    cfg = ScenarioConfig(n_houses=16, duration_s=10.0, n_clusters=1,
                         topology=CENTRALIZED, seed=seed)
    rows = throughput_sweep(cfg, distances or THROUGHPUT_DISTANCES, n_slots=n_slots)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["distance_m", "hops", "throughput_kbps"])
        for d, hops, bps in rows:
            w.writerow([f"{d:.1f}", hops, f"{bps / 1000.0:.6f}"])


def write_delay_csv(path: Path, house_counts=DELAY_HOUSE_COUNTS, seed: int = 0) -> None:
    """Ideal-channel control delay per gateway for the three topologies."""
    rows = []
    for n in house_counts:
        combos = [
            (CENTRALIZED, 1),
            (CENTRALIZED_2HOP, 1),
            (DISTRIBUTED, _cluster_count(n, TARGET_CLUSTER_HOUSES)),
        ]
        for topology, clusters in combos:
            cfg = _scenario(topology, n, clusters, seed, 0.0, ideal_links=True)
            cfg = replace(cfg, duration_s=12.0 * cfg.period_s())
            rows.append((topology, n, clusters, measure_control_delay(cfg)))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["topology", "n_houses", "n_clusters", "delay_s"])
        for topology, n, clusters, delay in rows:
            w.writerow([topology, n, clusters, f"{delay:.6f}"])


OVERLOAD_BY_SEED_COLUMNS = (
    "topology",
    "n_houses",
    "n_clusters",
    "seed",
    "supply_limit_w",
    "mean_overload_w",
    "max_overload_w",
    "mean_consumed_w",
)
OVERLOAD_SUMMARY_COLUMNS = (
    "topology",
    "n_houses",
    "n_clusters",
    "n_seeds",
    "supply_limit_w",
    "mean_overload_w",
    "max_overload_w",
)


def write_overload_csvs(out_dir: Path, results: list[dict]) -> None:
    """Per-seed rows plus per-configuration means over seeds."""
    with open(out_dir / "overload_by_seed.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(OVERLOAD_BY_SEED_COLUMNS)
        for r in results:
            w.writerow(
                [
                    r["topology"],
                    r["n_houses"],
                    r["n_clusters"],
                    r["seed"],
                    f"{r['supply_limit_w']:.3f}",
                    f"{r['mean_overload_w']:.3f}",
                    f"{r['max_overload_w']:.3f}",
                    f"{r['mean_consumed_w']:.3f}",
                ]
            )
    groups: dict[tuple, list[dict]] = {}
    for r in results:
        groups.setdefault((r["topology"], r["n_houses"], r["n_clusters"]), []).append(r)
    with open(out_dir / "overload_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(OVERLOAD_SUMMARY_COLUMNS)
        for (topology, n, clusters), rs in sorted(groups.items()):
            mean_over = sum(x["mean_overload_w"] for x in rs) / len(rs)
            max_over = max(x["max_overload_w"] for x in rs)
            w.writerow(
                [
                    topology,
                    n,
                    clusters,
                    len(rs),
                    f"{rs[0]['supply_limit_w']:.3f}",
                    f"{mean_over:.3f}",
                    f"{max_over:.3f}",
                ]
            )


def execute_run(item: PresetRun, out_root: Path) -> dict:
    """Run one scenario, write its CSVs, return the aggregate row."""
    cfg = item.cfg
    log = run(cfg)
    run_dir = out_root / "runs" / item.name
    run_dir.mkdir(parents=True, exist_ok=True)
    log.write_csvs(run_dir, bin_w=cfg.histogram_bin_w)
    return {
        "name": item.name,
        "topology": cfg.topology,
        "n_houses": cfg.n_houses,
        "n_clusters": cfg.n_clusters,
        "seed": cfg.seed,
        "supply_limit_w": log.supply_limit_w,
        "mean_overload_w": log.mean_overload_w,
        "max_overload_w": log.max_overload_w,
        "mean_consumed_w": log.mean_consumed_w,
    }
