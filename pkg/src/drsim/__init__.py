"""drsim: hierarchical distributed demand-response power control simulator."""

__version__ = "0.1.0"

from .config import ConfigError, ScenarioConfig, config_from_flat, load_config
from .control import (
    ControlTree,
    TurnoffDecision,
    aggregate_report,
    allocate_limits,
    build_tree,
    control_round,
    select_turnoff,
)
from .engine import (
    Simulation,
    measure_control_delay,
    power_histogram,
    run,
    throughput_sweep,
)
from .loads import (
    ApplianceSpec,
    HouseGateway,
    SwitchProcess,
    calibrate_duty,
    default_catalog,
    step_loads,
)
from .metrics import MetricsLog
from .radio import RadioConfig, expected_throughput_bps, mean_snr_db, packet_success
from .tdma import Frame, build_frame

__all__ = [
    "ApplianceSpec",
    "ConfigError",
    "ControlTree",
    "Frame",
    "HouseGateway",
    "MetricsLog",
    "RadioConfig",
    "ScenarioConfig",
    "Simulation",
    "SwitchProcess",
    "TurnoffDecision",
    "aggregate_report",
    "allocate_limits",
    "build_frame",
    "build_tree",
    "calibrate_duty",
    "config_from_flat",
    "control_round",
    "default_catalog",
    "expected_throughput_bps",
    "load_config",
    "mean_snr_db",
    "measure_control_delay",
    "packet_success",
    "power_histogram",
    "run",
    "select_turnoff",
    "step_loads",
    "throughput_sweep",
]
