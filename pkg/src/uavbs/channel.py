"""Link gain components for a UE-UAV radio link.

The overall gain is a product of antenna gain, distance-dependent path
gain, outdoor-to-indoor gain, spatially correlated log-normal shadowing
and per-resource Rician fast fading. All gains are linear power ratios;
configuration values are kept in dB/dBm where that is the natural unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def db_to_linear(value_db: float) -> float:
    """Convert a dB power ratio to linear scale."""
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    """Convert a linear power ratio to dB."""
    if value <= 0.0:
        raise ValueError(f"cannot convert non-positive value {value} to dB")
    return 10.0 * math.log10(value)


def dbm_to_watts(value_dbm: float) -> float:
    return 10.0 ** ((value_dbm - 30.0) / 10.0)


def watts_to_dbm(value_w: float) -> float:
    return linear_to_db(value_w) + 30.0


@dataclass
class ChannelParams:
    """Propagation constants for UE-UAV links.

    Path loss follows the urban-macro curve PL(dB) = intercept +
    slope * log10(d / 1 km) evaluated on 3D distance, with
    omnidirectional antennas at both ends by default. Transmit power is
    the total over all frequency resources and is split evenly.
    """

    carrier_frequency_hz: float = 2.0e9
    pathloss_intercept_db: float = 128.1  # loss at 1 km
    pathloss_slope_db: float = 37.6  # dB per decade of distance
    shadow_std_db: float = 8.0
    shadow_decorrelation_m: float = 25.0
    rician_k: float = 10.0  # linear LOS-to-scatter power ratio (10 dB)
    o2i_loss_db: float = 0.0
    bs_antenna_gain_dbi: float = 0.0
    ue_antenna_gain_dbi: float = 0.0
    num_resources: int = 50
    tx_power_dbm: float = 12.0  # total over all resources

    def __post_init__(self) -> None:
        if self.shadow_std_db < 0:
            raise ValueError("shadow_std_db must be >= 0")
        if self.rician_k < 0:
            raise ValueError("rician_k must be >= 0")
        if self.num_resources < 1:
            raise ValueError("num_resources must be >= 1")
        if self.pathloss_slope_db <= 0:
            raise ValueError("pathloss_slope_db must be > 0")
        if self.shadow_decorrelation_m <= 0:
            raise ValueError("shadow_decorrelation_m must be > 0")

    def tx_power_per_resource_w(self) -> float:
        """Transmit power per frequency resource, in watts."""
        return dbm_to_watts(self.tx_power_dbm) / self.num_resources


@dataclass
class LinkGainState:
    """Mutable per-link state: shadow realization and fast-fading gains.

    ``last_ue_position``/``last_uav_position`` track the endpoints so the
    shadow process can be advanced by the relative displacement.
    """

    shadow_db: float
    last_ue_position: np.ndarray  # (3,) metres
    last_uav_position: np.ndarray  # (3,) metres
    fading_gains: np.ndarray  # (num_resources,) linear power gains


def path_gain(distance_3d_m: float, params: ChannelParams) -> float:
    """Distance-dependent linear power gain.

    PL(dB) = intercept + slope * log10(d / 1000 m); returns 10^(-PL/10).
    Strictly decreasing in distance.
    """
    if distance_3d_m <= 0:
        raise ValueError(f"distance must be positive, got {distance_3d_m}")
    loss_db = params.pathloss_intercept_db + params.pathloss_slope_db * math.log10(
        distance_3d_m / 1000.0
    )
    return db_to_linear(-loss_db)


def shadow_gain_step(
    state: LinkGainState,
    displacement_m: float,
    rng: np.random.Generator,
    params: ChannelParams,
) -> float:
    """Advance the correlated shadow process by a relative displacement.

    AR(1) update with rho = exp(-displacement / decorrelation distance):
    the marginal distribution stays N(0, shadow_std^2) for any step size.
    Returns the new shadow value in dB.
    """
    if displacement_m < 0:
        raise ValueError("displacement must be >= 0")
    rho = math.exp(-displacement_m / params.shadow_decorrelation_m)
    innovation = rng.normal(0.0, params.shadow_std_db)
    state.shadow_db = rho * state.shadow_db + math.sqrt(1.0 - rho * rho) * innovation
    return state.shadow_db


def rician_fading_sample(
    rician_k: float, rng: np.random.Generator, size: int | None = None
):
    """Sample |h|^2 for a Rician channel with E[|h|^2] = 1.

    h = sqrt(K/(K+1)) + sqrt(1/(K+1)) * CN(0, 1). K = 0 reduces to
    Rayleigh (unit-mean exponential |h|^2); K -> inf is pure LOS.
    """
    if rician_k < 0:
        raise ValueError("rician_k must be >= 0")
    los = math.sqrt(rician_k / (rician_k + 1.0))
    scatter_scale = math.sqrt(1.0 / (2.0 * (rician_k + 1.0)))  # per I/Q component
    n = size if size is not None else 1
    comps = rng.standard_normal((n, 2)) * scatter_scale
    gains = (los + comps[:, 0]) ** 2 + comps[:, 1] ** 2
    if size is None:
        return float(gains[0])
    return gains


def total_gain(
    link: LinkGainState, params: ChannelParams, distance_3d_m: float
) -> np.ndarray:
    """Per-resource linear gain: antenna * path * O2I * shadow * fading."""
    fixed_db = (
        params.bs_antenna_gain_dbi
        + params.ue_antenna_gain_dbi
        - params.o2i_loss_db
        + link.shadow_db
    )
    scalar = path_gain(distance_3d_m, params) * db_to_linear(fixed_db)
    return scalar * link.fading_gains


def received_power(tx_power_per_resource_w, gain):
    """Received power P_rx = P_tx * G; accepts scalars or arrays."""
    if np.any(np.asarray(tx_power_per_resource_w) < 0):
        raise ValueError("tx power must be >= 0")
    if np.any(np.asarray(gain) < 0):
        raise ValueError("gain must be >= 0")
    return tx_power_per_resource_w * gain


def new_link_state(
    ue_position: np.ndarray,
    uav_position: np.ndarray,
    rng: np.random.Generator,
    params: ChannelParams,
) -> LinkGainState:
    """Fresh link state: shadow drawn from its marginal, fading resampled."""
    return LinkGainState(
        shadow_db=float(rng.normal(0.0, params.shadow_std_db)),
        last_ue_position=np.asarray(ue_position, dtype=float).copy(),
        last_uav_position=np.asarray(uav_position, dtype=float).copy(),
        fading_gains=rician_fading_sample(params.rician_k, rng, size=params.num_resources),
    )


def advance_link(
    link: LinkGainState,
    ue_position: np.ndarray,
    uav_position: np.ndarray,
    rng: np.random.Generator,
    params: ChannelParams,
) -> None:
    """Move a link to new endpoint positions for the next frame.

    Shadow advances by the change in the UE-UAV relative vector; fast
    fading decorrelates fully between frames and is redrawn.
    """
    ue_position = np.asarray(ue_position, dtype=float)
    uav_position = np.asarray(uav_position, dtype=float)
    relative_old = link.last_ue_position - link.last_uav_position
    relative_new = ue_position - uav_position
    diff = relative_new - relative_old
    displacement = math.sqrt(float(diff @ diff))
    shadow_gain_step(link, displacement, rng, params)
    link.fading_gains = rician_fading_sample(params.rician_k, rng, size=params.num_resources)
    link.last_ue_position = ue_position.copy()
    link.last_uav_position = uav_position.copy()
