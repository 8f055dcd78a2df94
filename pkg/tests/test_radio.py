import math

import numpy as np
import pytest

from drsim.radio import (
    RadioConfig,
    expected_throughput_bps,
    mean_snr_db,
    packet_success,
    run_trial,
    shadow_averaged_success,
    simulate_throughput_bps,
    success_probability,
)

NO_SHADOW = RadioConfig(shadowing_sigma_db=0.0)


def test_default_config_derived_values():
    cfg = RadioConfig()
    assert cfg.slot_duration_s == pytest.approx(0.0192)
    assert cfg.goodput_ceiling_bps == pytest.approx(50_000.0 * 256 / 1920)
    assert cfg.goodput_ceiling_bps == pytest.approx(6666.6667, abs=0.01)
    assert cfg.shadowing_sigma_db**2 == pytest.approx(8.0)


def test_config_rejects_oversized_packet():
    with pytest.raises(ValueError):
        RadioConfig(packet_length_bytes=100)  # 1600 coded symbols > 960
    with pytest.raises(ValueError):
        RadioConfig(success_model="psychic")


def test_mean_snr_reference_point():
    # 24 - 31.5 - 0 + 115 at one meter
    assert mean_snr_db(1.0, RadioConfig()) == pytest.approx(107.5)


def test_mean_snr_doubling_distance():
    cfg = RadioConfig()
    drop = mean_snr_db(100.0, cfg) - mean_snr_db(200.0, cfg)
    assert drop == pytest.approx(10 * 3.2 * math.log10(2), abs=1e-9)


def test_mean_snr_applies_shadowing_offset():
    cfg = RadioConfig()
    assert mean_snr_db(50.0, cfg, shadowing_db=7.0) == pytest.approx(
        mean_snr_db(50.0, cfg) + 7.0
    )


def test_mean_snr_rejects_nonpositive_distance():
    with pytest.raises(ValueError):
        mean_snr_db(0.0, RadioConfig())
    with pytest.raises(ValueError):
        mean_snr_db(-5.0, RadioConfig())


def test_threshold_success_closed_form():
    # success prob = exp(-snr_th / snr_mean) in linear units
    cfg = NO_SHADOW
    for d in (10.0, 200.0, 993.0):
        snr_mean = 10 ** (mean_snr_db(d, cfg) / 10)
        snr_th = 10 ** (cfg.success_threshold_db / 10)
        assert success_probability(d, cfg) == pytest.approx(math.exp(-snr_th / snr_mean))


def test_threshold_monte_carlo_matches_closed_form():
    # 1e5 slots at a distance where p ~ 0.5, within 1% absolute.
    cfg = NO_SHADOW
    d = 993.0
    rng = np.random.default_rng(1234)
    hits = sum(packet_success(d, cfg, rng) for _ in range(100_000))
    assert abs(hits / 100_000 - success_probability(d, cfg)) <= 0.01


def test_near_field_success_probability():
    cfg = NO_SHADOW
    assert success_probability(1.0, cfg) >= 0.999
    rng = np.random.default_rng(7)
    hits = sum(packet_success(1.0, cfg, rng) for _ in range(2000))
    assert hits >= 1998


def test_far_field_success_vanishes():
    assert success_probability(50_000.0, NO_SHADOW) < 1e-6


def test_trials_are_seed_reproducible():
    cfg = RadioConfig()
    a = [run_trial(300.0, cfg, np.random.default_rng(5), 1.5) for _ in range(1)]
    b = [run_trial(300.0, cfg, np.random.default_rng(5), 1.5) for _ in range(1)]
    assert a == b
    seq1 = [packet_success(300.0, cfg, np.random.default_rng(9)) for _ in range(20)]
    seq2 = [packet_success(300.0, cfg, np.random.default_rng(9)) for _ in range(20)]
    assert seq1 == seq2


def test_ber_mode_behaves():
    cfg = RadioConfig(success_model="ber", shadowing_sigma_db=0.0)
    near = success_probability(1.0, cfg)
    mid = success_probability(500.0, cfg)
    far = success_probability(5000.0, cfg)
    assert 0.999 <= near <= 1.0
    assert 0.0 <= far <= mid <= near
    rng = np.random.default_rng(3)
    assert isinstance(packet_success(1.0, cfg, rng), bool)


def test_two_hop_success_dominates_far_out():
    cfg = NO_SHADOW
    for d in (800.0, 1500.0, 3000.0):
        p1 = success_probability(d, cfg)
        p2 = success_probability(d / 2, cfg) ** 2
        assert p2 > p1


def test_expected_throughput_near_field_hits_ceiling():
    cfg = NO_SHADOW
    thr = expected_throughput_bps(1.0, cfg, hops=1)
    assert thr == pytest.approx(cfg.goodput_ceiling_bps, rel=1e-3)


def test_two_hop_ceiling_is_half():
    cfg = NO_SHADOW
    thr = expected_throughput_bps(1.0, cfg, hops=2)
    assert thr == pytest.approx(cfg.goodput_ceiling_bps / 2, rel=1e-3)
    assert expected_throughput_bps(1.0, cfg, hops=2) == pytest.approx(
        cfg.goodput_ceiling_bps / 2 * success_probability(0.5, cfg) ** 2
    )


def test_throughput_monotone_in_distance():
    cfg = RadioConfig()  # shadowing on, averaged analytically
    grid = [20.0 * (i + 1) for i in range(60)]
    vals = [expected_throughput_bps(d, cfg) for d in grid]
    assert all(a >= b - 1e-9 for a, b in zip(vals, vals[1:]))


def test_monte_carlo_throughput_matches_analytic():
    cfg = RadioConfig()
    rng = np.random.default_rng(11)
    for d, hops in ((200.0, 1), (700.0, 1), (700.0, 2)):
        mc = simulate_throughput_bps(d, cfg, rng, n_slots=200_000, hops=hops)
        exact = expected_throughput_bps(d, cfg, hops=hops)
        assert mc == pytest.approx(exact, rel=0.05)


def test_two_hop_throughput_dominates_at_range():
    cfg = RadioConfig()
    assert expected_throughput_bps(1800.0, cfg, hops=2) > expected_throughput_bps(
        1800.0, cfg, hops=1
    )


def test_zero_transmit_power_kills_throughput():
    cfg = RadioConfig(tx_power_dbm=-200.0, shadowing_sigma_db=0.0)
    for d in (10.0, 100.0, 1000.0):
        assert expected_throughput_bps(d, cfg) == pytest.approx(0.0, abs=1e-9)


def test_shadow_average_reduces_to_plain_without_sigma():
    cfg = NO_SHADOW
    assert shadow_averaged_success(400.0, cfg) == success_probability(400.0, cfg)
