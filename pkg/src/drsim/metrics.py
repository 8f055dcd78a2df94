"""Run metrics: power traces, per-cluster records, delays, packet counters,
and the per-house power distribution.

Traces are sampled at a configurable slot cadence; overload statistics are
integrated tick-exactly from the piecewise-constant consumption signal
regardless of the trace cadence. Per-house samples are taken once per
control period and folded into 1 W-resolution counts so any coarser
histogram can be rebinned later.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TRACE_COLUMNS = ("tick", "time_s", "demand_w", "consumed_w", "limit_w", "overload_w")
CLUSTER_COLUMNS = (
    "tick",
    "time_s",
    "period",
    "cluster",
    "limit_w",
    "reported_w",
    "n_off",
    "residual_w",
)
HISTOGRAM_COLUMNS = ("bin_low_w", "bin_high_w", "probability")


@dataclass
class MetricsLog:
    t_slot_s: float
    frame_slots: int
    n_ticks: int
    n_periods: int
    n_houses: int
    supply_limit_w: float

    trace_tick: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    trace_demand_w: np.ndarray = field(default_factory=lambda: np.empty(0))
    trace_consumed_w: np.ndarray = field(default_factory=lambda: np.empty(0))

    cluster_rows: list[tuple] = field(default_factory=list)

    power_counts: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=np.int64))
    n_power_samples: int = 0

    delay_sum_ticks: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    delay_samples: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    ul_ok: int = 0
    ul_lost: int = 0
    dl_ok: int = 0
    dl_lost: int = 0

    root_reported_w: np.ndarray = field(default_factory=lambda: np.empty(0))
    overload_integral_w_ticks: float = 0.0
    consumed_integral_w_ticks: float = 0.0
    max_overload_w: float = 0.0
    total_sheds: int = 0

    @property
    def trace_overload_w(self) -> np.ndarray:
        return np.maximum(0.0, self.trace_consumed_w - self.supply_limit_w)

    @property
    def mean_overload_w(self) -> float:
        return self.overload_integral_w_ticks / self.n_ticks

    @property
    def mean_consumed_w(self) -> float:
        return self.consumed_integral_w_ticks / self.n_ticks

    def mean_delay_s(self) -> float:
        """Mean report-to-command delay. Averaged in whole ticks first so an
        ideal channel reproduces the period formula bit-exactly."""
        total = int(self.delay_sum_ticks.sum())
        count = int(self.delay_samples.sum())
        if count == 0:
            return float("nan")
        return (total / count) * self.t_slot_s

    def per_gateway_delay_s(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(
                self.delay_samples > 0, self.delay_sum_ticks / self.delay_samples, np.nan
            ) * self.t_slot_s

    def power_histogram(self, bin_w: float = 10.0) -> tuple[np.ndarray, np.ndarray]:
        """Normalized per-house power distribution: (bin edges, probabilities)."""
        if self.n_power_samples == 0:
            raise ValueError("no per-house samples recorded")
        if bin_w <= 0:
            raise ValueError("bin width must be positive")
        watts = np.arange(self.power_counts.size)
        n_bins = int(np.floor(watts[-1] / bin_w)) + 1
        bins = np.zeros(n_bins, dtype=np.int64)
        np.add.at(bins, np.floor(watts / bin_w).astype(int), self.power_counts)
        edges = np.arange(n_bins + 1) * bin_w
        return edges, bins / self.n_power_samples

    def summary(self) -> dict:
        mean_delay = self.mean_delay_s()
        return {
            "n_ticks": self.n_ticks,
            "n_periods": self.n_periods,
            "frame_slots": self.frame_slots,
            "t_slot_s": self.t_slot_s,
            "supply_limit_w": self.supply_limit_w,
            "mean_consumed_w": self.mean_consumed_w,
            "mean_overload_w": self.mean_overload_w,
            "max_overload_w": self.max_overload_w,
            "mean_delay_s": None if np.isnan(mean_delay) else mean_delay,
            "packets": {
                "uplink_ok": self.ul_ok,
                "uplink_lost": self.ul_lost,
                "downlink_ok": self.dl_ok,
                "downlink_lost": self.dl_lost,
            },
            "total_sheds": self.total_sheds,
        }

    def equals(self, other: "MetricsLog") -> bool:
        return (
            self.summary() == other.summary()
            and np.array_equal(self.trace_tick, other.trace_tick)
            and np.array_equal(self.trace_demand_w, other.trace_demand_w)
            and np.array_equal(self.trace_consumed_w, other.trace_consumed_w)
            and self.cluster_rows == other.cluster_rows
            and np.array_equal(self.power_counts, other.power_counts)
            and np.array_equal(self.delay_sum_ticks, other.delay_sum_ticks)
            and np.array_equal(self.root_reported_w, other.root_reported_w)
        )

    # ------------------------------------------------------------------ CSV

    def write_power_trace(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_COLUMNS)
            over = self.trace_overload_w
            for i, tick in enumerate(self.trace_tick):
                w.writerow(
                    [
                        int(tick),
                        f"{tick * self.t_slot_s:.4f}",
                        f"{self.trace_demand_w[i]:.3f}",
                        f"{self.trace_consumed_w[i]:.3f}",
                        f"{self.supply_limit_w:.3f}",
                        f"{over[i]:.3f}",
                    ]
                )

    def write_cluster_trace(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CLUSTER_COLUMNS)
            for tick, period, cluster, limit, reported, n_off, residual in self.cluster_rows:
                w.writerow(
                    [
                        tick,
                        f"{tick * self.t_slot_s:.4f}",
                        period,
                        cluster,
                        f"{limit:.3f}",
                        f"{reported:.3f}",
                        n_off,
                        f"{residual:.3f}",
                    ]
                )

    def write_histogram(self, path: str | Path, bin_w: float = 10.0) -> None:
        edges, probs = self.power_histogram(bin_w)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(HISTOGRAM_COLUMNS)
            for i, p in enumerate(probs):
                w.writerow([f"{edges[i]:.1f}", f"{edges[i + 1]:.1f}", f"{p:.9f}"])

    def write_summary(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_csvs(self, out_dir: str | Path, bin_w: float = 10.0) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / "power_trace.csv", out / "cluster_trace.csv"]
        self.write_power_trace(paths[0])
        self.write_cluster_trace(paths[1])
        if self.n_power_samples:
            paths.append(out / "histogram.csv")
            self.write_histogram(paths[-1], bin_w)
        paths.append(out / "summary.json")
        self.write_summary(paths[-1])
        return paths
