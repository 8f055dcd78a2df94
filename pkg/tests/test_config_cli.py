import hashlib
import json
import subprocess
import sys
from pathlib import Path

import pytest

from drsim.config import (
    ConfigError,
    ScenarioConfig,
    config_from_flat,
    config_to_flat,
    load_config,
    parse_flat,
)

GOOD_CONFIG = """
# minimal distributed scenario
n_houses = 60
duration_s = 60
seed = 7
topology = distributed
n_clusters = 3
radio.tx_power_dbm = 24
"""


def run_cli(*args, env=None):
    return subprocess.run(
        [sys.executable, "-m", "drsim.cli", *args],
        capture_output=True,
        text=True,
        env=env,
    )


def hash_outputs(out_dir: Path) -> dict[str, str]:
    return {
        p.name: hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(out_dir.iterdir())
        if p.is_file()
    }


# ----------------------------------------------------------------- parsing


def test_parse_and_build_config():
    cfg = config_from_flat(parse_flat(GOOD_CONFIG))
    assert cfg.n_houses == 60
    assert cfg.seed == 7
    assert cfg.topology == "distributed"
    cfg.validate()


def test_unknown_key_is_fatal():
    with pytest.raises(ConfigError, match="unknown config key"):
        config_from_flat({"n_houses": "10", "duration_s": "60", "warp_speed": "9"})
    with pytest.raises(ConfigError, match="unknown config key"):
        config_from_flat({"n_houses": "10", "duration_s": "60", "radio.warp": "9"})


def test_missing_required_keys():
    with pytest.raises(ConfigError, match="missing required key"):
        config_from_flat({"duration_s": "60"})


def test_duplicate_and_malformed_lines():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_flat("a = 1\na = 2")
    with pytest.raises(ConfigError, match="expected"):
        parse_flat("just words")


def test_bool_coercion():
    flat = parse_flat("n_houses = 16\nduration_s = 60\nn_clusters = 1\nideal_links = yes")
    assert config_from_flat(flat).ideal_links is True
    with pytest.raises(ConfigError):
        config_from_flat(
            {"n_houses": "16", "duration_s": "60", "ideal_links": "maybe"}
        )


def test_catalog_override_roundtrip():
    text = "\n".join(
        [
            "n_houses = 10",
            "duration_s = 60",
            "n_clusters = 1",
            "target_mean_w = 500",
            "pinned = heater",
            "catalog.0.name = heater",
            "catalog.0.rated_power_w = 400",
            "catalog.0.priority_class = high",
            "catalog.0.priority_rank = 1",
            "catalog.1.name = fan",
            "catalog.1.rated_power_w = 200",
            "catalog.1.priority_class = low",
            "catalog.1.priority_rank = 0",
        ]
    )
    cfg = config_from_flat(parse_flat(text))
    cfg.validate()
    assert [a.name for a in cfg.catalog] == ["heater", "fan"]
    duties = [a.duty_target for a in cfg.resolved_catalog()]
    assert duties[0] == 1.0
    assert duties[1] == pytest.approx(0.5)
    echo = config_to_flat(cfg)
    assert echo["catalog.1.rated_power_w"] == "200.0"


def test_catalog_override_requires_contiguous_indices():
    with pytest.raises(ConfigError, match="contiguous"):
        config_from_flat(
            {
                "n_houses": "10",
                "duration_s": "60",
                "catalog.1.name": "fan",
                "catalog.1.rated_power_w": "200",
                "catalog.1.priority_class": "low",
                "catalog.1.priority_rank": "0",
            }
        )


def test_validation_failures():
    with pytest.raises(ConfigError, match="n_houses"):
        ScenarioConfig(n_houses=0, duration_s=60.0).validate()
    with pytest.raises(ConfigError, match="one cluster"):
        ScenarioConfig(
            n_houses=10, duration_s=60.0, topology="centralized", n_clusters=2
        ).validate()
    with pytest.raises(ConfigError, match="10 control periods"):
        ScenarioConfig(
            n_houses=1000, duration_s=10.0, topology="centralized", n_clusters=1
        ).validate()
    with pytest.raises(ConfigError, match="empty cluster"):
        ScenarioConfig(n_houses=40, duration_s=600.0, n_clusters=9).validate()


def test_supply_default_is_ninety_percent_of_mean():
    cfg = ScenarioConfig(n_houses=5000, duration_s=3600.0)
    assert cfg.resolved_supply_w() == pytest.approx(0.9 * 5000 * 1200.0)


# --------------------------------------------------------------------- CLI


def test_cli_validate_ok(tmp_path):
    path = tmp_path / "ok.cfg"
    path.write_text(GOOD_CONFIG)
    res = run_cli("validate", "--config", str(path))
    assert res.returncode == 0
    assert "ok" in res.stdout


def test_cli_validate_bad_config(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("n_houses = 0\nduration_s = 60\n")
    res = run_cli("validate", "--config", str(path))
    assert res.returncode == 2
    assert "error" in res.stderr


def test_cli_unknown_preset_fails(tmp_path):
    res = run_cli("preset", "fig99", "--out", str(tmp_path))
    assert res.returncode != 0


def test_cli_run_writes_outputs_and_manifest(tmp_path):
    cfg = tmp_path / "scenario.cfg"
    cfg.write_text(GOOD_CONFIG)
    out = tmp_path / "out"
    res = run_cli("run", "--config", str(cfg), "--out", str(out))
    assert res.returncode == 0, res.stderr
    for name in ("power_trace.csv", "cluster_trace.csv", "histogram.csv",
                 "summary.json", "frame.csv", "manifest.json"):
        assert (out / name).exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 7
    assert manifest["config"]["n_houses"] == "60"
    assert "power_trace.csv" in manifest["outputs"]


def test_cli_run_seed_override(tmp_path):
    cfg = tmp_path / "scenario.cfg"
    cfg.write_text(GOOD_CONFIG)
    out = tmp_path / "out"
    res = run_cli("run", "--config", str(cfg), "--out", str(out), "--seed", "99")
    assert res.returncode == 0
    assert json.loads((out / "manifest.json").read_text())["seed"] == 99


def test_cli_run_byte_identical_for_same_seed(tmp_path):
    cfg = tmp_path / "scenario.cfg"
    cfg.write_text(GOOD_CONFIG)
    out_a, out_b, out_c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert run_cli("run", "--config", str(cfg), "--out", str(out_a)).returncode == 0
    assert run_cli("run", "--config", str(cfg), "--out", str(out_b)).returncode == 0
    assert run_cli(
        "run", "--config", str(cfg), "--out", str(out_c), "--seed", "8"
    ).returncode == 0
    assert hash_outputs(out_a) == hash_outputs(out_b)
    assert hash_outputs(out_a) != hash_outputs(out_c)


def test_cli_preset_fig10_cluster_sweep(tmp_path):
    out = tmp_path / "fig10"
    res = run_cli(
        "preset", "fig10", "--out", str(out),
        "--houses", "90", "--seeds", "2", "--duration", "60",
    )
    assert res.returncode == 0, res.stderr
    rows = (out / "overload_by_seed.csv").read_text().splitlines()
    assert rows[0].startswith("topology,")
    clusters = {line.split(",")[2] for line in rows[1:]}
    assert clusters == {"4", "9"}
    assert len(rows) == 1 + 2 * 2  # two cluster counts x two seeds
    assert (out / "overload_summary.csv").exists()
    run_dirs = list((out / "runs").iterdir())
    assert len(run_dirs) == 4
    for d in run_dirs:
        assert (d / "power_trace.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["preset"] == "fig10"


def test_cli_out_env_default(tmp_path):
    import os

    cfg = tmp_path / "scenario.cfg"
    cfg.write_text(GOOD_CONFIG)
    env = dict(os.environ, DRSIM_OUT=str(tmp_path / "envout"))
    res = run_cli("run", "--config", str(cfg), env=env)
    assert res.returncode == 0
    assert (tmp_path / "envout" / "power_trace.csv").exists()
