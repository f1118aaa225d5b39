"""Link quality metrics: SINR, throughput, the log-fair objective and AoA.

These are the only quantities the placement agent is allowed to observe;
UE coordinates never leave this module except through the angle of
arrival of their reference signals.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .channel import dbm_to_watts


@dataclass
class RadioConfig:
    """System-level radio parameters shared by all links."""

    bandwidth_hz: float = 10e6
    num_ues: int = 10
    noise_density_dbm_hz: float = -174.0
    noise_figure_db: float = 9.0
    sinr_cap: float = 255.0  # caps the per-UE rate at (B/U)*log2(1+cap)
    rate_floor_bps: float = 1e3  # keeps log10(rate) finite in deep fades
    aoa_noise_std_deg: float = 0.0

    def __post_init__(self) -> None:
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be > 0")
        if self.num_ues < 1:
            raise ValueError("num_ues must be >= 1")
        if self.sinr_cap <= 0:
            raise ValueError("sinr_cap must be > 0")
        if self.rate_floor_bps <= 0:
            raise ValueError("rate_floor_bps must be > 0")
        if self.aoa_noise_std_deg < 0:
            raise ValueError("aoa_noise_std_deg must be >= 0")

    def max_rate_bps(self) -> float:
        """Per-UE ceiling implied by the SINR cap."""
        return (self.bandwidth_hz / self.num_ues) * math.log2(1.0 + self.sinr_cap)


@dataclass
class LinkMeasurement:
    """Per-frame measurement snapshot for all UEs of one serving UAV."""

    per_ue_effective_sinr: np.ndarray  # (U,) linear ratios
    per_ue_rate: np.ndarray  # (U,) bit/s
    per_ue_aoa: np.ndarray  # (U,) degrees in [-180, 180)
    fair_rate: float  # sum of log10(rate)


def thermal_noise_w(radio: RadioConfig, bandwidth_hz: float) -> float:
    """Receiver noise power over the given bandwidth, in watts."""
    noise_dbm = (
        radio.noise_density_dbm_hz
        + 10.0 * math.log10(bandwidth_hz)
        + radio.noise_figure_db
    )
    return dbm_to_watts(noise_dbm)


def compute_sinr(serving_rx_w, interferer_rx_w, noise_power_w: float):
    """Per-resource SINR: serving power over interference plus noise.

    ``serving_rx_w`` is a scalar or (K,) vector; ``interferer_rx_w`` is a
    sequence of like-shaped received powers from other transmitters (empty
    for a single serving UAV, in which case this is plain SNR).
    """
    if noise_power_w <= 0:
        raise ValueError("noise_power_w must be > 0")
    serving = np.asarray(serving_rx_w, dtype=float)
    if np.any(serving < 0):
        raise ValueError("received powers must be >= 0")
    interference = np.zeros_like(serving)
    for rx in interferer_rx_w:
        rx = np.asarray(rx, dtype=float)
        if np.any(rx < 0):
            raise ValueError("received powers must be >= 0")
        interference = interference + rx
    return serving / (interference + noise_power_w)


def effective_sinr(per_resource_sinr, cap: float) -> float:
    """Arithmetic mean over the allocated resources, clipped at ``cap``."""
    sinr = np.asarray(per_resource_sinr, dtype=float)
    if sinr.size == 0:
        raise ValueError("per_resource_sinr must not be empty")
    return float(min(sinr.mean(), cap))


def ue_rate(eff_sinr: float, radio: RadioConfig) -> float:
    """Round-robin Shannon rate with a floor: max((B/U)*log2(1+g), floor)."""
    if eff_sinr < 0:
        raise ValueError("effective SINR must be >= 0")
    rate = (radio.bandwidth_hz / radio.num_ues) * math.log2(1.0 + eff_sinr)
    return max(rate, radio.rate_floor_bps)


def fair_rate(rates_bps) -> float:
    """Log-fair network objective: sum over UEs of log10(rate)."""
    rates = np.asarray(rates_bps, dtype=float)
    if np.any(rates <= 0):
        raise ValueError("all rates must be positive; apply the rate floor first")
    return float(np.sum(np.log10(rates)))


def wrap_angle_deg(angle_deg: float) -> float:
    """Wrap an angle into [-180, 180)."""
    return float((angle_deg + 180.0) % 360.0 - 180.0)


def measure_aoa(
    ue_position,
    uav_position,
    noise_std_deg: float,
    rng: np.random.Generator,
) -> float:
    """Noisy azimuth of the UE as seen from the UAV, degrees in [-180, 180).

    Angles are measured from east, counter-clockwise. Horizontally
    coincident endpoints have no defined azimuth; 0 degrees is used.
    """
    dx = float(ue_position[0] - uav_position[0])
    dy = float(ue_position[1] - uav_position[1])
    if dx == 0.0 and dy == 0.0:
        warnings.warn("UE and UAV horizontally coincident; AoA defaults to 0 deg")
        true_deg = 0.0
    else:
        true_deg = math.degrees(math.atan2(dy, dx))
    noisy = true_deg + rng.normal(0.0, noise_std_deg)
    return wrap_angle_deg(noisy)


def aoa_circular_stats(angles_deg, max_std_deg: float = 180.0) -> tuple[float, float]:
    """Circular mean and circular standard deviation of a set of angles.

    Mean is atan2 of the averaged unit vectors; std is sqrt(-2 ln R) of
    the mean resultant length R, converted to degrees and capped at
    ``max_std_deg``. Arithmetic statistics would be wrong here: angles
    {179, -179} must average to +-180, not 0.
    """
    angles = np.radians(np.asarray(angles_deg, dtype=float))
    if angles.size == 0:
        raise ValueError("need at least one angle")
    resultant_x = float(np.mean(np.cos(angles)))
    resultant_y = float(np.mean(np.sin(angles)))
    resultant_len = math.hypot(resultant_x, resultant_y)
    if resultant_len <= 1e-12:
        warnings.warn("uniform angular spread; circular mean undefined, using 0 deg")
        return 0.0, float(max_std_deg)
    mean_deg = wrap_angle_deg(math.degrees(math.atan2(resultant_y, resultant_x)))
    if resultant_len >= 1.0 - 1e-12:
        # coincident angles; sqrt(-2 ln R) would amplify rounding in R
        return mean_deg, 0.0
    std_deg = min(math.degrees(math.sqrt(-2.0 * math.log(resultant_len))), max_std_deg)
    return mean_deg, std_deg
