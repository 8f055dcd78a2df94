"""Render the simulator's CSV outputs into the six comparison figures.

Each renderer consumes exactly the CSV schemas published by the simulator
(see CSV_SCHEMAS.md at the repo root) and writes one PNG. Inputs are never
modified; re-rendering produces identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


class RenderError(RuntimeError):
    pass


FIGURES = ("fig6", "fig7", "fig8", "fig9", "fig10", "fig11")

TRACE_COLUMNS = ["tick", "time_s", "demand_w", "consumed_w", "limit_w", "overload_w"]
HIST_COLUMNS = ["bin_low_w", "bin_high_w", "probability"]
THROUGHPUT_COLUMNS = ["distance_m", "hops", "throughput_kbps"]
DELAY_COLUMNS = ["topology", "n_houses", "n_clusters", "delay_s"]
SUMMARY_COLUMNS = [
    "topology",
    "n_houses",
    "n_clusters",
    "n_seeds",
    "supply_limit_w",
    "mean_overload_w",
    "max_overload_w",
]
BY_SEED_COLUMNS = [
    "topology",
    "n_houses",
    "n_clusters",
    "seed",
    "supply_limit_w",
    "mean_overload_w",
    "max_overload_w",
    "mean_consumed_w",
]


def read_rows(path: Path, expected: list[str]) -> list[dict[str, str]]:
    if not path.exists():
        raise RenderError(f"missing input CSV: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != expected:
            raise RenderError(
                f"{path} has columns {reader.fieldnames}, expected {expected}"
            )
        rows = list(reader)
    if not rows:
        raise RenderError(f"{path} has no data rows")
    return rows


def parse_run_name(name: str) -> tuple[str, int, int, int]:
    """<topology>_n<houses>_c<clusters>_s<seed> (topology may contain '_')."""
    parts = name.rsplit("_", 3)
    try:
        topology = parts[0]
        n, c, s = (int(p[1:]) for p in parts[1:])
        if [p[0] for p in parts[1:]] != ["n", "c", "s"]:
            raise ValueError
    except (ValueError, IndexError):
        raise RenderError(f"unrecognized run directory name: {name}") from None
    return topology, n, c, s


def representative_runs(in_dir: Path, want_topology=None) -> list[tuple[tuple, Path]]:
    """Lowest-seed run directory per (topology, houses, clusters)."""
    runs_dir = in_dir / "runs"
    if not runs_dir.is_dir():
        raise RenderError(f"missing runs/ directory under {in_dir}")
    best: dict[tuple, tuple[int, Path]] = {}
    for child in sorted(runs_dir.iterdir()):
        if not child.is_dir():
            continue
        topology, n, c, seed = parse_run_name(child.name)
        if want_topology and not topology.startswith(want_topology):
            continue
        key = (topology, n, c)
        if key not in best or seed < best[key][0]:
            best[key] = (seed, child)
    if not best:
        raise RenderError(f"no matching runs under {runs_dir}")
    return [(key, path) for key, (_seed, path) in sorted(best.items())]


def _save(fig, out_dir: Path, name: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


# ----------------------------------------------------------------- figures


def render_fig6(in_dir: Path, out_dir: Path) -> list[Path]:
    rows = read_rows(in_dir / "throughput_vs_d.csv", THROUGHPUT_COLUMNS)
    series: dict[int, list[tuple[float, float]]] = {}
    for r in rows:
        series.setdefault(int(r["hops"]), []).append(
            (float(r["distance_m"]), float(r["throughput_kbps"]))
        )
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for hops, pts in sorted(series.items()):
        pts.sort()
        label = "1 hop (direct)" if hops == 1 else f"{hops} hops (midpoint relay)"
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker=".", label=label)
    ax.set_xlabel("distance to controller [m]")
    ax.set_ylabel("average throughput [kbps]")
    ax.set_title("Average throughput vs. distance")
    ax.grid(True, alpha=0.3)
    ax.legend()
    return [_save(fig, out_dir, "fig6_throughput_vs_distance.png")]


def render_fig7(in_dir: Path, out_dir: Path) -> list[Path]:
    rows = read_rows(in_dir / "delay_vs_n.csv", DELAY_COLUMNS)
    series: dict[str, list[tuple[int, float]]] = {}
    for r in rows:
        series.setdefault(r["topology"], []).append(
            (int(r["n_houses"]), float(r["delay_s"]))
        )
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for topology, pts in sorted(series.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=topology)
    ax.set_xlabel("number of houses")
    ax.set_ylabel("control delay per gateway [s]")
    ax.set_title("Average control delay vs. number of nodes")
    if len({p for pts in series.values() for p in pts}) > 1:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return [_save(fig, out_dir, "fig7_control_delay_vs_nodes.png")]


def _render_traces(in_dir: Path, out_dir: Path, topology: str, out_name: str,
                   title: str) -> list[Path]:
    runs = representative_runs(in_dir, want_topology=topology)
    fig, axes = plt.subplots(
        len(runs), 1, figsize=(7.5, 3.0 * len(runs)), squeeze=False, sharex=False
    )
    for ax, ((topo, n, clusters), run_dir) in zip(axes[:, 0], runs):
        rows = read_rows(run_dir / "power_trace.csv", TRACE_COLUMNS)
        t = [float(r["time_s"]) for r in rows]
        ax.plot(t, [float(r["demand_w"]) / 1e3 for r in rows],
                label="demand", alpha=0.7)
        ax.plot(t, [float(r["consumed_w"]) / 1e3 for r in rows], label="consumed")
        ax.plot(t, [float(r["limit_w"]) / 1e3 for r in rows],
                label="supply limit", linestyle="--", color="k")
        ax.set_title(f"{topo}, {n} houses, {clusters} cluster(s)", fontsize=10)
        ax.set_xlabel("time [s]")
        ax.set_ylabel("power [kW]")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
    fig.suptitle(title)
    fig.tight_layout()
    return [_save(fig, out_dir, out_name)]


def render_fig8(in_dir: Path, out_dir: Path) -> list[Path]:
    return _render_traces(
        in_dir, out_dir, "centralized", "fig8_centralized_power.png",
        "Power control performance of the centralized scheme",
    )


def render_fig9(in_dir: Path, out_dir: Path) -> list[Path]:
    return _render_traces(
        in_dir, out_dir, "distributed", "fig9_distributed_power.png",
        "Power control performance of the distributed scheme",
    )


def render_fig10(in_dir: Path, out_dir: Path) -> list[Path]:
    summary = read_rows(in_dir / "overload_summary.csv", SUMMARY_COLUMNS)
    by_seed = read_rows(in_dir / "overload_by_seed.csv", BY_SEED_COLUMNS)
    labels = []
    means = []
    for r in summary:
        labels.append(f"{r['n_clusters']} clusters\n({r['topology']})")
        means.append(float(r["mean_overload_w"]) / 1e3)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    x = range(len(labels))
    ax.bar(x, means, width=0.55, alpha=0.8, label="mean over seeds")
    keys = [(r["topology"], r["n_clusters"]) for r in summary]
    for r in by_seed:
        try:
            xi = keys.index((r["topology"], r["n_clusters"]))
        except ValueError:
            continue
        ax.plot(xi, float(r["mean_overload_w"]) / 1e3, "k.", markersize=5)
    ax.set_xticks(list(x), labels)
    ax.set_ylabel("mean overload power [kW]")
    ax.set_title("Overload power vs. cluster count (dots: individual seeds)")
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend()
    return [_save(fig, out_dir, "fig10_overload_power.png")]


def render_fig11(in_dir: Path, out_dir: Path) -> list[Path]:
    runs = representative_runs(in_dir)
    fig, ax = plt.subplots(figsize=(7.5, 4.5))
    upper = 0.0
    for (topology, n, clusters), run_dir in runs:
        rows = read_rows(run_dir / "histogram.csv", HIST_COLUMNS)
        centers = [(float(r["bin_low_w"]) + float(r["bin_high_w"])) / 2 for r in rows]
        probs = [float(r["probability"]) for r in rows]
        ax.step(centers, probs, where="mid", label=f"{topology} ({clusters} cluster(s))")
        upper = max(upper, max(c for c, p in zip(centers, probs) if p > 0))
    ax.set_xlim(0, upper * 1.1)
    ax.set_xlabel("instantaneous power per house [W]")
    ax.set_ylabel("probability")
    ax.set_title("Distribution of instantaneous consumed power")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    return [_save(fig, out_dir, "fig11_power_distribution.png")]


RENDERERS = {
    "fig6": render_fig6,
    "fig7": render_fig7,
    "fig8": render_fig8,
    "fig9": render_fig9,
    "fig10": render_fig10,
    "fig11": render_fig11,
}


def render(figure: str, in_dir: str | Path, out_dir: str | Path) -> list[Path]:
    """Render one figure from a preset's output directory."""
    if figure not in RENDERERS:
        raise RenderError(f"unknown figure {figure!r}; expected one of {FIGURES}")
    return RENDERERS[figure](Path(in_dir), Path(out_dir))
