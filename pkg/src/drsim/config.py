"""Scenario configuration and the flat key=value config file format.

A config file holds one `key = value` per line with `#` comments; nested
fields use dotted keys (radio.tx_power_dbm, catalog.0.rated_power_w).
Unknown keys are errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields as dc_fields, replace
from pathlib import Path

from .loads import (
    ApplianceSpec,
    DEFAULT_PINNED,
    calibrate_duty,
    default_catalog,
    validate_catalog,
)
from .radio import RadioConfig
from .tdma import CENTRALIZED, CENTRALIZED_2HOP, DISTRIBUTED, TOPOLOGIES

BATCH = "batch"
ITERATIVE = "iterative"
GATEWAY_PLANE = "gateway"
APPLIANCE_PLANE = "appliance"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    n_houses: int
    duration_s: float
    seed: int = 0
    topology: str = DISTRIBUTED
    n_clusters: int = 9
    degree: int | None = None  # None: single top controller (two layers)
    control_mode: str = BATCH
    member_plane: str = GATEWAY_PLANE
    supply_limit_w: float | None = None  # None: 0.9 * n_houses * target_mean_w
    area_side_m: float = 1000.0
    placement: str = "uniform"  # uniform | grid
    target_mean_w: float = 1200.0
    mean_cycle_s: float = 900.0
    pinned: tuple[str, ...] = DEFAULT_PINNED
    catalog: tuple[ApplianceSpec, ...] | None = None  # None: default catalog
    radio: RadioConfig = field(default_factory=RadioConfig)
    ideal_links: bool = False
    backbone_latency_s: float = 0.0
    report_age_cap: int = 10
    sample_every_slots: int | None = None  # None: ~1 s of slots
    histogram_bin_w: float = 10.0

    # ------------------------------------------------------------ derived

    def resolved_supply_w(self) -> float:
        if self.supply_limit_w is not None:
            return self.supply_limit_w
        return 0.9 * self.n_houses * self.target_mean_w

    def base_catalog(self) -> tuple[ApplianceSpec, ...]:
        return tuple(self.catalog) if self.catalog is not None else tuple(default_catalog())

    def resolved_catalog(self) -> tuple[ApplianceSpec, ...]:
        """Catalog with duty targets calibrated to the target mean power."""
        cat = self.base_catalog()
        duties = calibrate_duty(cat, self.target_mean_w, self.pinned)
        return tuple(a.with_duty(d) for a, d in zip(cat, duties))

    def members_per_house(self) -> int:
        return len(self.base_catalog()) if self.member_plane == APPLIANCE_PLANE else 1

    def frame_size(self) -> tuple[int, int]:
        """(total members, members per cluster) for the TDMA frame."""
        k = self.members_per_house()
        n_cs = -(-self.n_houses // self.n_clusters)
        return self.n_houses * k, n_cs * k

    def period_s(self) -> float:
        n, n_cs = self.frame_size()
        slots = 2 * n_cs if self.topology == DISTRIBUTED else 2 * n
        if self.topology == CENTRALIZED_2HOP:
            slots *= 2
        return slots * self.radio.slot_duration_s

    def resolved_sample_every(self) -> int:
        if self.sample_every_slots is not None:
            return self.sample_every_slots
        return max(1, round(1.0 / self.radio.slot_duration_s))

    # ----------------------------------------------------------- checking

    def validate(self) -> None:
        errors = []
        if self.n_houses < 1:
            errors.append("n_houses must be at least 1")
        if self.topology not in TOPOLOGIES:
            errors.append(f"unknown topology {self.topology!r}")
        elif self.topology in (CENTRALIZED, CENTRALIZED_2HOP) and self.n_clusters != 1:
            errors.append("centralized topologies use exactly one cluster")
        if self.n_clusters < 1:
            errors.append("n_clusters must be at least 1")
        elif self.n_houses >= 1 and self.n_clusters > self.n_houses:
            errors.append("more clusters than houses")
        elif (
            self.n_houses >= 1
            and (self.n_clusters - 1) * -(-self.n_houses // self.n_clusters) >= self.n_houses
        ):
            errors.append(
                f"{self.n_clusters} clusters over {self.n_houses} houses would leave "
                "an empty cluster under the contiguous ceil split"
            )
        if self.degree is not None and self.n_clusters > 1 and self.degree < 2:
            errors.append("degree must be >= 2 for a multi-cluster tree")
        if self.control_mode not in (BATCH, ITERATIVE):
            errors.append(f"unknown control mode {self.control_mode!r}")
        if self.member_plane not in (GATEWAY_PLANE, APPLIANCE_PLANE):
            errors.append(f"unknown member plane {self.member_plane!r}")
        if self.placement not in ("uniform", "grid"):
            errors.append(f"unknown placement {self.placement!r}")
        if self.area_side_m <= 0:
            errors.append("area side must be positive")
        if self.resolved_supply_w() <= 0:
            errors.append("supply limit must be positive")
        if self.mean_cycle_s <= 0:
            errors.append("mean cycle must be positive")
        if self.backbone_latency_s < 0:
            errors.append("backbone latency cannot be negative")
        if self.report_age_cap < 0:
            errors.append("report age cap cannot be negative")
        if self.sample_every_slots is not None and self.sample_every_slots < 1:
            errors.append("sample_every_slots must be at least 1")
        if self.histogram_bin_w <= 0:
            errors.append("histogram bin width must be positive")
        if not errors:
            try:
                validate_catalog(self.base_catalog())
                self.resolved_catalog()
            except ValueError as exc:
                errors.append(str(exc))
            if self.duration_s < 10 * self.period_s():
                errors.append(
                    f"duration {self.duration_s} s is shorter than 10 control periods "
                    f"({10 * self.period_s():.4f} s)"
                )
        if errors:
            raise ConfigError("; ".join(errors))


# ---------------------------------------------------------------- flat I/O

_SCENARIO_KEYS = {
    "n_houses": int,
    "duration_s": float,
    "seed": int,
    "topology": str,
    "n_clusters": int,
    "degree": int,
    "control_mode": str,
    "member_plane": str,
    "supply_limit_w": float,
    "area_side_m": float,
    "placement": str,
    "target_mean_w": float,
    "mean_cycle_s": float,
    "ideal_links": bool,
    "backbone_latency_s": float,
    "report_age_cap": int,
    "sample_every_slots": int,
    "histogram_bin_w": float,
}

_RADIO_KEYS = {
    "tx_power_dbm": float,
    "pathloss_exponent": float,
    "shadowing_sigma_db": float,
    "symbol_rate_sps": float,
    "bits_per_symbol": int,
    "coding_rate": float,
    "packet_length_bytes": int,
    "slot_symbols": int,
    "noise_floor_dbm": float,
    "reference_loss_db": float,
    "success_threshold_db": float,
    "success_model": str,
}

_CATALOG_KEYS = {
    "name": str,
    "rated_power_w": float,
    "priority_class": str,
    "priority_rank": int,
}

_OPTIONAL_NONE = {"degree", "supply_limit_w", "sample_every_slots"}


def _coerce(key: str, raw: str, typ) -> object:
    raw = raw.strip()
    if typ is bool:
        lowered = raw.lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        return typ(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def parse_flat(text: str) -> dict[str, str]:
    """`key = value` lines into a dict; `#` starts a comment."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def config_from_flat(flat: dict[str, str]) -> ScenarioConfig:
    scenario: dict[str, object] = {}
    radio: dict[str, object] = {}
    catalog_raw: dict[int, dict[str, object]] = {}
    for key, raw in flat.items():
        if key == "pinned":
            scenario["pinned"] = tuple(s.strip() for s in raw.split(",") if s.strip())
        elif key in _SCENARIO_KEYS:
            if key in _OPTIONAL_NONE and raw.lower() == "auto":
                scenario[key] = None
            else:
                scenario[key] = _coerce(key, raw, _SCENARIO_KEYS[key])
        elif key.startswith("radio."):
            sub = key[len("radio."):]
            if sub not in _RADIO_KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            radio[sub] = _coerce(key, raw, _RADIO_KEYS[sub])
        elif key.startswith("catalog."):
            parts = key.split(".")
            if len(parts) != 3 or parts[2] not in _CATALOG_KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                idx = int(parts[1])
            except ValueError:
                raise ConfigError(f"unknown config key {key!r}") from None
            catalog_raw.setdefault(idx, {})[parts[2]] = _coerce(
                key, raw, _CATALOG_KEYS[parts[2]]
            )
        else:
            raise ConfigError(f"unknown config key {key!r}")
    for required in ("n_houses", "duration_s"):
        if required not in scenario:
            raise ConfigError(f"missing required key {required!r}")
    if catalog_raw:
        indices = sorted(catalog_raw)
        if indices != list(range(len(indices))):
            raise ConfigError("catalog indices must be contiguous from 0")
        entries = []
        for i in indices:
            entry = catalog_raw[i]
            missing = set(_CATALOG_KEYS) - set(entry)
            if missing:
                raise ConfigError(f"catalog.{i} missing keys: {sorted(missing)}")
            entries.append(ApplianceSpec(**entry))
        scenario["catalog"] = tuple(entries)
    if radio:
        scenario["radio"] = RadioConfig(**radio)
    return ScenarioConfig(**scenario)


def load_config(path: str | Path) -> ScenarioConfig:
    return config_from_flat(parse_flat(Path(path).read_text()))


def config_to_flat(cfg: ScenarioConfig) -> dict[str, str]:
    """Canonical flat echo of a config (used by run manifests)."""
    flat: dict[str, str] = {}
    for key in _SCENARIO_KEYS:
        value = getattr(cfg, key)
        if value is None:
            flat[key] = "auto"
        elif isinstance(value, bool):
            flat[key] = "true" if value else "false"
        elif isinstance(value, float):
            flat[key] = repr(value)
        else:
            flat[key] = str(value)
    flat["pinned"] = ",".join(cfg.pinned)
    for key in _RADIO_KEYS:
        value = getattr(cfg.radio, key)
        flat[f"radio.{key}"] = repr(value) if isinstance(value, float) else str(value)
    if cfg.catalog is not None:
        for i, spec in enumerate(cfg.catalog):
            flat[f"catalog.{i}.name"] = spec.name
            flat[f"catalog.{i}.rated_power_w"] = repr(spec.rated_power_w)
            flat[f"catalog.{i}.priority_class"] = spec.priority_class
            flat[f"catalog.{i}.priority_rank"] = str(spec.priority_rank)
    return dict(sorted(flat.items()))
