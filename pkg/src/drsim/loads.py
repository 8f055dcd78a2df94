"""Household load model.

Each house carries one appliance of each catalog entry. An appliance cycles
on/off as a two-state process with exponential holding times; duty targets
are calibrated so the ensemble-average house power hits a configured mean
(1200 W in the reference scenario). A forced-off appliance contributes 0 W
no matter what its stochastic state does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

HIGH_PRIORITY = "high"
LOW_PRIORITY = "low"

DEFAULT_MEAN_CYCLE_S = 15 * 60.0


class CalibrationError(ValueError):
    """Requested mean power cannot be met by the catalog."""


@dataclass(frozen=True)
class ApplianceSpec:
    """One appliance type: rated power, shedding priority, duty target.

    Lower `priority_rank` is shed first. Within a house every low-class
    appliance must rank strictly below every high-class appliance.
    """

    name: str
    rated_power_w: float
    priority_class: str
    priority_rank: int
    duty_target: float = 1.0

    def __post_init__(self) -> None:
        if self.rated_power_w <= 0:
            raise ValueError(f"rated power must be positive, got {self.rated_power_w}")
        if self.priority_class not in (HIGH_PRIORITY, LOW_PRIORITY):
            raise ValueError(f"unknown priority class {self.priority_class!r}")
        if not 0.0 <= self.duty_target <= 1.0:
            raise ValueError(f"duty target must lie in [0, 1], got {self.duty_target}")

    def with_duty(self, duty: float) -> "ApplianceSpec":
        return ApplianceSpec(
            self.name, self.rated_power_w, self.priority_class, self.priority_rank, duty
        )


def validate_catalog(catalog: Sequence[ApplianceSpec]) -> None:
    """Reject duplicate ranks and low-class ranks above high-class ones."""
    if not catalog:
        raise ValueError("catalog is empty")
    ranks = [a.priority_rank for a in catalog]
    if len(set(ranks)) != len(ranks):
        raise ValueError("priority ranks must be unique within a house")
    low = [a.priority_rank for a in catalog if a.priority_class == LOW_PRIORITY]
    high = [a.priority_rank for a in catalog if a.priority_class == HIGH_PRIORITY]
    if low and high and max(low) >= min(high):
        raise ValueError("every low-priority appliance must rank below every high-priority one")


def default_catalog() -> list[ApplianceSpec]:
    """Reference four-appliance catalog, one of each per house.

    The lamp carries the lowest rank (shed first), then the television;
    the refrigerator and air conditioner are high priority and never shed.
    """
    return [
        ApplianceSpec("air_conditioner", 831.0, HIGH_PRIORITY, 3),
        ApplianceSpec("refrigerator", 268.0, HIGH_PRIORITY, 2),
        ApplianceSpec("television", 141.0, LOW_PRIORITY, 1),
        ApplianceSpec("lamp", 60.0, LOW_PRIORITY, 0),
    ]


DEFAULT_PINNED = ("refrigerator",)


def calibrate_duty(
    catalog: Sequence[ApplianceSpec],
    target_mean_w: float,
    pinned: Iterable[str] = DEFAULT_PINNED,
) -> list[float]:
    """Duty fractions d_k with sum(d_k * P_k) == target_mean_w.

    Appliances named in `pinned` (the refrigerator by default) are held at
    duty 1.0 and the rest share a single scale factor. If the target sits
    below the pinned power the pinned appliances are scaled instead and all
    others get duty 0, so the identity still holds.
    """
    validate_catalog(catalog)
    total = sum(a.rated_power_w for a in catalog)
    if target_mean_w <= 0:
        raise CalibrationError(f"target mean must be positive, got {target_mean_w}")
    if target_mean_w > total + 1e-9:
        raise CalibrationError(
            f"target mean {target_mean_w} W exceeds total rated power {total} W"
        )
    pinned = set(pinned)
    pinned_power = sum(a.rated_power_w for a in catalog if a.name in pinned)
    free_power = total - pinned_power
    duties = []
    if target_mean_w >= pinned_power and free_power > 0:
        frac = min(1.0, (target_mean_w - pinned_power) / free_power)
        duties = [1.0 if a.name in pinned else frac for a in catalog]
    elif target_mean_w >= pinned_power:
        # Catalog is entirely pinned.
        duties = [target_mean_w / total for a in catalog]
    else:
        duties = [target_mean_w / pinned_power if a.name in pinned else 0.0 for a in catalog]
    achieved = sum(d * a.rated_power_w for d, a in zip(duties, catalog))
    if abs(achieved - target_mean_w) > 1e-6:
        raise CalibrationError(
            f"calibration residual {achieved - target_mean_w:.3e} W exceeds tolerance"
        )
    return duties


@dataclass(frozen=True)
class SwitchProcess:
    """Two-state on/off cycle with exponential holding times.

    Rates are in events/hour; the stationary on-probability is
    rate_on / (rate_on + rate_off).
    """

    rate_on_per_h: float
    rate_off_per_h: float
    stream: int = 0

    def __post_init__(self) -> None:
        if self.rate_on_per_h < 0 or self.rate_off_per_h < 0:
            raise ValueError("switch rates must be non-negative")

    @property
    def stationary_on(self) -> float:
        total = self.rate_on_per_h + self.rate_off_per_h
        if total == 0:
            return 0.0
        return self.rate_on_per_h / total

    @classmethod
    def from_duty(
        cls, duty: float, mean_cycle_s: float = DEFAULT_MEAN_CYCLE_S, stream: int = 0
    ) -> "SwitchProcess":
        """Rates whose stationary on-probability is `duty` and whose mean
        on+off cycle is `mean_cycle_s` (degenerate at duty 0 or 1)."""
        if not 0.0 <= duty <= 1.0:
            raise ValueError(f"duty must lie in [0, 1], got {duty}")
        if mean_cycle_s <= 0:
            raise ValueError("mean cycle must be positive")
        per_h = 3600.0 / mean_cycle_s
        if duty == 0.0:
            return cls(0.0, per_h, stream)
        if duty == 1.0:
            return cls(per_h, 0.0, stream)
        mean_on_s = duty * mean_cycle_s
        mean_off_s = (1.0 - duty) * mean_cycle_s
        return cls(3600.0 / mean_off_s, 3600.0 / mean_on_s, stream)

    def mean_holding_s(self, on: bool) -> float:
        """Expected dwell time in the given state; inf when absorbing."""
        rate = self.rate_off_per_h if on else self.rate_on_per_h
        if rate == 0:
            return math.inf
        return 3600.0 / rate


@dataclass
class ApplianceState:
    on: bool
    next_switch_s: float = math.inf


@dataclass
class HouseGateway:
    """Per-house aggregation point: meters total power, executes local sheds."""

    house_id: int
    position: tuple[float, float]
    appliances: list[tuple[ApplianceSpec, ApplianceState]]
    forced_off: set[int] = field(default_factory=set)

    def demand_power_w(self) -> float:
        """Power the house would draw with no appliance forced off."""
        return sum(s.rated_power_w for s, st in self.appliances if st.on)

    def instantaneous_power_w(self) -> float:
        return sum(
            s.rated_power_w
            for i, (s, st) in enumerate(self.appliances)
            if st.on and i not in self.forced_off
        )

    def set_forced_off(self, indices: Iterable[int]) -> None:
        """Replace the shed set; only low-priority appliances may appear."""
        indices = set(indices)
        for i in indices:
            if self.appliances[i][0].priority_class != LOW_PRIORITY:
                raise ValueError(f"appliance {i} is high priority and cannot be forced off")
        self.forced_off = indices


def _draw_holding_s(proc: SwitchProcess, on: bool, rng: np.random.Generator) -> float:
    mean = proc.mean_holding_s(on)
    if math.isinf(mean):
        return math.inf
    return float(rng.exponential(mean))


def make_house(
    house_id: int,
    position: tuple[float, float],
    catalog: Sequence[ApplianceSpec],
    rng: np.random.Generator,
    mean_cycle_s: float = DEFAULT_MEAN_CYCLE_S,
    now_s: float = 0.0,
) -> HouseGateway:
    """House with appliances started from the stationary on/off distribution."""
    validate_catalog(catalog)
    appliances = []
    for spec in catalog:
        proc = SwitchProcess.from_duty(spec.duty_target, mean_cycle_s)
        on = bool(rng.random() < proc.stationary_on)
        state = ApplianceState(on=on)
        state.next_switch_s = now_s + _draw_holding_s(proc, on, rng)
        appliances.append((spec, state))
    return HouseGateway(house_id, position, appliances)


def step_loads(
    houses: Sequence[HouseGateway],
    dt_s: float,
    rng: np.random.Generator,
    mean_cycle_s: float = DEFAULT_MEAN_CYCLE_S,
    now_s: float = 0.0,
) -> float:
    """Advance every appliance's switching chain by dt_s; returns the new time.

    Reproducible for a fixed seed and a fixed stepping schedule (the shared
    generator interleaves appliances differently if dt chunking changes).
    Forced-off appliances keep evolving underneath; they just contribute 0 W.
    """
    if dt_s <= 0:
        raise ValueError("dt must be positive")
    t_end = now_s + dt_s
    for house in houses:
        for spec, state in house.appliances:
            proc = SwitchProcess.from_duty(spec.duty_target, mean_cycle_s)
            while state.next_switch_s <= t_end:
                state.on = not state.on
                state.next_switch_s += _draw_holding_s(proc, state.on, rng)
    return t_end


def total_power_w(houses: Sequence[HouseGateway]) -> float:
    return sum(h.instantaneous_power_w() for h in houses)
