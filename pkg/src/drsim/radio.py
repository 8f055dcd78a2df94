"""Wireless link model: log-distance path loss, log-normal shadowing,
Rayleigh fading, and per-slot packet success.

Shadowing is drawn once per link (quasi-static environment); the Rayleigh
power gain is fresh every slot. Success is decided either by an SNR
threshold (default) or by a noncoherent-BFSK bit-error model with a
rate-1/2 coding approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.laguerre import laggauss

THRESHOLD = "threshold"
BER = "ber"


@dataclass(frozen=True)
class RadioConfig:
    tx_power_dbm: float = 24.0  # ~250 mW
    pathloss_exponent: float = 3.2
    shadowing_sigma_db: float = math.sqrt(8.0)  # 8 dB variance
    symbol_rate_sps: float = 50_000.0
    bits_per_symbol: int = 1  # binary FSK
    coding_rate: float = 0.5
    packet_length_bytes: int = 32
    slot_symbols: int = 960
    noise_floor_dbm: float = -115.0
    reference_loss_db: float = 31.5  # free-space at 1 m, ~920 MHz
    success_threshold_db: float = 10.0
    success_model: str = THRESHOLD

    def __post_init__(self) -> None:
        if self.success_model not in (THRESHOLD, BER):
            raise ValueError(f"unknown success model {self.success_model!r}")
        if not 0 < self.coding_rate <= 1:
            raise ValueError("coding rate must lie in (0, 1]")
        if self.symbol_rate_sps <= 0 or self.slot_symbols <= 0:
            raise ValueError("symbol rate and slot length must be positive")
        coded_symbols = self.packet_length_bytes * 8 / self.coding_rate / self.bits_per_symbol
        if coded_symbols > self.slot_symbols:
            raise ValueError("coded packet does not fit the slot")

    @property
    def slot_duration_s(self) -> float:
        return self.slot_symbols / self.symbol_rate_sps

    @property
    def packet_bits(self) -> int:
        return self.packet_length_bytes * 8

    @property
    def goodput_ceiling_bps(self) -> float:
        """Delivered payload rate with every packet received: one packet per
        uplink/downlink slot pair."""
        return self.symbol_rate_sps * self.packet_bits / (self.slot_symbols * 2)


@dataclass(frozen=True)
class PacketTrial:
    distance_m: float
    shadowing_db: float
    fading_gain: float
    success: bool


def mean_snr_db(d_m: float, cfg: RadioConfig, shadowing_db: float = 0.0) -> float:
    """Fading-averaged SNR at distance d_m with the given shadowing offset."""
    if d_m <= 0:
        raise ValueError(f"distance must be positive, got {d_m}")
    return (
        cfg.tx_power_dbm
        - cfg.reference_loss_db
        - 10.0 * cfg.pathloss_exponent * math.log10(d_m)
        + shadowing_db
        - cfg.noise_floor_dbm
    )


def _per_given_snr(snr_linear: np.ndarray, cfg: RadioConfig) -> np.ndarray:
    """Coded packet error rate for noncoherent BFSK at instantaneous SNR."""
    p_bit = 0.5 * np.exp(-snr_linear / 2.0)
    p_coded = np.minimum(1.0, 16.0 * p_bit**2)  # rate-1/2 coding approximation
    return 1.0 - (1.0 - p_coded) ** cfg.packet_bits


_LAGUERRE_NODES, _LAGUERRE_WEIGHTS = laggauss(96)
_HERMITE_NODES, _HERMITE_WEIGHTS = hermegauss(64)
_HERMITE_WEIGHTS = _HERMITE_WEIGHTS / math.sqrt(2.0 * math.pi)


def success_probability(d_m: float, cfg: RadioConfig, shadowing_db: float = 0.0) -> float:
    """Per-slot success probability averaged over Rayleigh fading only.

    Threshold mode has the closed form exp(-snr_th / snr_mean) in linear
    units; BER mode integrates the coded PER over the unit-mean exponential
    power gain with Gauss-Laguerre quadrature.
    """
    snr_mean = 10.0 ** (mean_snr_db(d_m, cfg, shadowing_db) / 10.0)
    if cfg.success_model == THRESHOLD:
        snr_th = 10.0 ** (cfg.success_threshold_db / 10.0)
        return float(math.exp(-snr_th / snr_mean))
    per = _per_given_snr(snr_mean * _LAGUERRE_NODES, cfg)
    return float(np.sum(_LAGUERRE_WEIGHTS * (1.0 - per)))


def shadow_averaged_success(d_m: float, cfg: RadioConfig) -> float:
    """Success probability averaged over both shadowing and fading."""
    if cfg.shadowing_sigma_db == 0:
        return success_probability(d_m, cfg)
    draws = cfg.shadowing_sigma_db * _HERMITE_NODES
    vals = [success_probability(d_m, cfg, s) for s in draws]
    return float(np.dot(_HERMITE_WEIGHTS, vals))


def packet_success(
    d_m: float,
    cfg: RadioConfig,
    rng: np.random.Generator,
    shadowing_db: float = 0.0,
) -> bool:
    """One slot's success draw with a fresh Rayleigh power gain."""
    return run_trial(d_m, cfg, rng, shadowing_db).success


def run_trial(
    d_m: float,
    cfg: RadioConfig,
    rng: np.random.Generator,
    shadowing_db: float = 0.0,
) -> PacketTrial:
    gain = float(rng.exponential(1.0))
    snr_db = mean_snr_db(d_m, cfg, shadowing_db) + 10.0 * math.log10(gain)
    if cfg.success_model == THRESHOLD:
        ok = snr_db >= cfg.success_threshold_db
    else:
        per = float(_per_given_snr(np.asarray(10.0 ** (snr_db / 10.0)), cfg))
        ok = bool(rng.random() < 1.0 - per)
    return PacketTrial(d_m, shadowing_db, gain, bool(ok))


def draw_shadowing_db(cfg: RadioConfig, rng: np.random.Generator, size=None):
    return rng.normal(0.0, cfg.shadowing_sigma_db, size=size)


def expected_throughput_bps(d_m: float, cfg: RadioConfig, hops: int = 1) -> float:
    """Analytic goodput at distance d_m, averaged over shadowing and fading.

    A relayed transmission uses two slots per packet (half ceiling) with an
    ideally placed midpoint relay and independent hop successes.
    """
    if hops == 1:
        return cfg.goodput_ceiling_bps * shadow_averaged_success(d_m, cfg)
    if hops == 2:
        p_hop = shadow_averaged_success(d_m / 2.0, cfg)
        return cfg.goodput_ceiling_bps / 2.0 * p_hop**2
    raise ValueError(f"hops must be 1 or 2, got {hops}")


def simulate_throughput_bps(
    d_m: float,
    cfg: RadioConfig,
    rng: np.random.Generator,
    n_slots: int = 100_000,
    hops: int = 1,
) -> float:
    """Monte Carlo goodput over an ensemble of links at distance d_m.

    Shadowing is redrawn per packet (link ensemble average, matching
    expected_throughput_bps); fading is fresh per hop.
    """
    if hops not in (1, 2):
        raise ValueError(f"hops must be 1 or 2, got {hops}")
    if n_slots <= 0:
        raise ValueError("n_slots must be positive")
    hop_d = d_m / hops
    n_packets = n_slots // hops
    shadow = draw_shadowing_db(cfg, rng, size=(n_packets, hops))
    mean_db = (
        cfg.tx_power_dbm
        - cfg.reference_loss_db
        - 10.0 * cfg.pathloss_exponent * math.log10(hop_d)
        - cfg.noise_floor_dbm
    )
    gains = rng.exponential(1.0, size=(n_packets, hops))
    snr_db = mean_db + shadow + 10.0 * np.log10(gains)
    if cfg.success_model == THRESHOLD:
        ok = snr_db >= cfg.success_threshold_db
    else:
        per = _per_given_snr(10.0 ** (snr_db / 10.0), cfg)
        ok = rng.random(size=per.shape) < 1.0 - per
    delivered = ok.all(axis=1).sum()
    return float(delivered * cfg.packet_bits / (n_slots * 2 * cfg.slot_duration_s))
