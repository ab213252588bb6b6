"""Measurement oracle: received-power evaluation and bandwidth metrics.

The only module that touches the true channel. Learners observe it purely
through (optionally noisy) power measurements returned by the functions
here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelMatrix, SystemConfig
from .combiner import TWO_PI, CombinerConfig, repeat_delays


@dataclass(frozen=True)
class GainProfile:
    """Per-subcarrier power gain |w_k^H h_k|^2 with the bin frequencies."""

    per_subcarrier: np.ndarray
    freqs_hz: np.ndarray

    def __post_init__(self):
        gains = np.atleast_1d(np.asarray(self.per_subcarrier, dtype=float))
        freqs = np.atleast_1d(np.asarray(self.freqs_hz, dtype=float))
        if gains.shape != freqs.shape:
            raise ValueError("gain and frequency lengths differ")
        if np.any(gains < 0.0):
            raise ValueError("gains must be nonnegative")
        gains.setflags(write=False)
        freqs.setflags(write=False)
        object.__setattr__(self, "per_subcarrier", gains)
        object.__setattr__(self, "freqs_hz", freqs)


@dataclass(frozen=True)
class MeasurementRecord:
    """A full set of per-subcarrier power measurements for one configuration."""

    config: CombinerConfig
    powers: np.ndarray
    snapshots: int
    seed: int

    def __post_init__(self):
        powers = np.atleast_1d(np.asarray(self.powers, dtype=float))
        if np.any(powers < 0.0):
            raise ValueError("powers must be nonnegative")
        if self.snapshots < 1:
            raise ValueError("need at least one snapshot")
        powers.setflags(write=False)
        object.__setattr__(self, "powers", powers)


def _check_dims(cc: CombinerConfig, H: ChannelMatrix, cfg: SystemConfig) -> None:
    if H.num_antennas != cfg.num_antennas:
        raise ValueError("channel and config disagree on antenna count")
    if cc.theta.size != cfg.num_antennas or cc.tau.size != cfg.num_td_units:
        raise ValueError("configuration does not match the system dimensions")


def _inner_products(cc: CombinerConfig, H: ChannelMatrix, cfg: SystemConfig) -> np.ndarray:
    """w_k^H h_k for every subcarrier of H, shape (K,) complex."""
    tau_full = repeat_delays(cc.tau, cfg.ps_per_td)
    phases = cc.theta[:, None] - TWO_PI * H.freqs_hz[None, :] * tau_full[:, None]
    W = np.exp(1j * phases) / np.sqrt(cfg.num_antennas)
    return np.sum(np.conj(W) * H.coeffs, axis=0)


def _inner_product_at(cc: CombinerConfig, H: ChannelMatrix, cfg: SystemConfig, k: int) -> complex:
    """w_k^H h_k for a single subcarrier; avoids touching the other bins."""
    tau_full = repeat_delays(cc.tau, cfg.ps_per_td)
    w = np.exp(1j * (cc.theta - TWO_PI * H.freqs_hz[k] * tau_full)) / np.sqrt(
        cfg.num_antennas
    )
    return complex(np.vdot(w, H.coeffs[:, k]))


def gain_profile(cc: CombinerConfig, H: ChannelMatrix, cfg: SystemConfig) -> GainProfile:
    """Noiseless per-subcarrier power gain |w_k^H h_k|^2."""
    _check_dims(cc, H, cfg)
    vals = np.abs(_inner_products(cc, H, cfg)) ** 2
    return GainProfile(per_subcarrier=vals, freqs_hz=H.freqs_hz)


def avg_amplitude_gain(cc: CombinerConfig, H: ChannelMatrix, cfg: SystemConfig) -> float:
    """Mean amplitude gain (1/K) sum_k |w_k^H h_k| (the design objective)."""
    gp = gain_profile(cc, H, cfg)
    return float(np.mean(np.sqrt(gp.per_subcarrier)))


def _rng_for(seed: int, k: int) -> np.random.Generator:
    # randomness keyed on (seed, subcarrier) so concurrent evaluations of
    # different subcarriers stay reproducible and independent
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(k,)))


def measure_power(
    cc: CombinerConfig,
    H: ChannelMatrix,
    cfg: SystemConfig,
    k: int,
    snapshots: int = 1,
    seed: int = 0,
) -> float:
    """Average received power |y_k|^2 over independent snapshots.

    Each snapshot transmits a constant-modulus symbol of power P_T/K through
    the combined channel and adds combined noise of variance noise_power_w
    (the combiner is unit-norm). Expectation is
    (P_T/K) |w_k^H h_k|^2 + noise_power_w; the noiseless case is returned
    exactly. Deterministic per (seed, k, snapshot index).
    """
    _check_dims(cc, H, cfg)
    if not 0 <= k < H.num_subcarriers:
        raise ValueError(f"subcarrier index {k} out of range")
    if snapshots < 1:
        raise ValueError("need at least one snapshot")
    sym_power = cfg.tx_power_w / cfg.num_subcarriers
    wh = _inner_product_at(cc, H, cfg, k)
    if cfg.noise_power_w == 0.0:
        return sym_power * float(np.abs(wh) ** 2)
    rng = _rng_for(seed, k)
    sym = np.sqrt(sym_power) * np.exp(1j * rng.uniform(0.0, TWO_PI, size=snapshots))
    noise_scale = np.sqrt(cfg.noise_power_w / 2.0)
    noise = noise_scale * (
        rng.standard_normal(snapshots) + 1j * rng.standard_normal(snapshots)
    )
    y = wh * sym + noise
    return float(np.mean(np.abs(y) ** 2))


def measure_profile_powers(
    cc: CombinerConfig,
    H: ChannelMatrix,
    cfg: SystemConfig,
    snapshots: int = 1,
    seed: int = 0,
) -> np.ndarray:
    """Measured power for every subcarrier of H; vector of length K."""
    _check_dims(cc, H, cfg)
    sym_power = cfg.tx_power_w / cfg.num_subcarriers
    wh = _inner_products(cc, H, cfg)
    if cfg.noise_power_w == 0.0:
        return sym_power * np.abs(wh) ** 2
    return np.array(
        [
            measure_power(cc, H, cfg, k, snapshots=snapshots, seed=seed)
            for k in range(H.num_subcarriers)
        ]
    )


def measure_record(
    cc: CombinerConfig,
    H: ChannelMatrix,
    cfg: SystemConfig,
    snapshots: int = 1,
    seed: int = 0,
) -> MeasurementRecord:
    powers = measure_profile_powers(cc, H, cfg, snapshots=snapshots, seed=seed)
    return MeasurementRecord(config=cc, powers=powers, snapshots=snapshots, seed=seed)


def center_bin(freqs_hz: np.ndarray, center_freq_hz: float) -> int:
    """Index of the subcarrier bin nearest the given frequency."""
    return int(np.argmin(np.abs(np.asarray(freqs_hz) - center_freq_hz)))


def three_db_bandwidth(gp: GainProfile, cfg: SystemConfig) -> float:
    """Width of the half-gain band around the center bin, in Hz.

    Grows a window symmetrically around the bin nearest f_c for as long as
    every bin it reaches keeps at least half the center-bin gain; the window
    is clipped at the band edges. Returns (bins in window) * (B/K).
    """
    gains = gp.per_subcarrier
    K = gains.size
    c = center_bin(gp.freqs_hz, cfg.center_freq_hz)
    threshold = 0.5 * gains[c]
    w = 0
    while True:
        lo, hi = c - (w + 1), c + (w + 1)
        if lo < 0 and hi >= K:
            break
        if lo >= 0 and gains[lo] < threshold:
            break
        if hi < K and gains[hi] < threshold:
            break
        w += 1
    count = min(K - 1, c + w) - max(0, c - w) + 1
    return count * (cfg.bandwidth_hz / cfg.num_subcarriers)


def normalized_gain_db(gp: GainProfile) -> np.ndarray:
    """Per-subcarrier gain in dB relative to the bin nearest band center."""
    mid = 0.5 * (gp.freqs_hz[0] + gp.freqs_hz[-1])
    c = center_bin(gp.freqs_hz, mid)
    ref = gp.per_subcarrier[c]
    if ref == 0.0:
        raise ValueError("zero gain at the center bin")
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(gp.per_subcarrier / ref)


def write_gain_csv(gp: GainProfile, path, header_comment: str = "") -> None:
    """CSV export: freq_hz,gain_linear,gain_db_rel_center."""
    db = normalized_gain_db(gp)
    with open(path, "w") as fh:
        if header_comment:
            fh.write(header_comment)
        fh.write("freq_hz,gain_linear,gain_db_rel_center\n")
        for f, g, d in zip(gp.freqs_hz, gp.per_subcarrier, db):
            fh.write(f"{f:.10g},{g:.12g},{d:.6f}\n")
