"""Episodic placement environment driven purely by radio measurements.

The observation stacks the last M+1 frames of (UAV position, mean UE
SINR, circular AoA statistics); UE coordinates never appear. Actions are
continuous (direction, step length) moves of the UAV, and the reward is
the min-max normalized log-fair sum rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import channel as ch
from . import metrics as mt
from . import mobility as mb


@dataclass
class ActionCommand:
    """One flight decision: heading (degrees from east) and step length."""

    direction_deg: float
    magnitude_m: float


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool
    info: dict


@dataclass
class EnvConfig:
    frames_per_episode: int = 128
    memory: int = 4  # observation stacks memory+1 frames
    r_max_m: float = 20.0
    uav_altitude_m: float = 50.0
    ue_height_m: float = 1.5
    scenario: mb.MobilityScenario = field(default_factory=mb.MobilityScenario)
    radio: mt.RadioConfig = field(default_factory=mt.RadioConfig)
    channel: ch.ChannelParams = field(default_factory=ch.ChannelParams)
    reward_bounds: tuple[float, float] | None = None  # None -> analytic bounds
    sinr_state_mode: str = "mean"  # "mean" or "per_ue"
    sinr_db_norm_range: tuple[float, float] = (-10.0, 30.0)
    aoa_std_cap_deg: float = 180.0
    uav_start: str = "random"  # "random" or "center"

    def __post_init__(self) -> None:
        if self.frames_per_episode < 1:
            raise ValueError("frames_per_episode must be >= 1")
        if self.memory < 0:
            raise ValueError("memory must be >= 0")
        if self.r_max_m <= 0:
            raise ValueError("r_max_m must be > 0")
        if self.uav_altitude_m <= self.ue_height_m:
            raise ValueError("uav_altitude_m must exceed ue_height_m")
        if self.sinr_state_mode not in ("mean", "per_ue"):
            raise ValueError("sinr_state_mode must be 'mean' or 'per_ue'")
        if self.uav_start not in ("random", "center"):
            raise ValueError("uav_start must be 'random' or 'center'")
        lo, hi = self.sinr_db_norm_range
        if hi <= lo:
            raise ValueError("sinr_db_norm_range must be increasing")

    def frame_size(self) -> int:
        sinr_entries = self.radio.num_ues if self.sinr_state_mode == "per_ue" else 1
        return 4 + sinr_entries

    def observation_size(self) -> int:
        return self.frame_size() * (self.memory + 1)

    def effective_reward_bounds(self) -> tuple[float, float]:
        """Analytic min/max of the fair rate given floor and SINR cap."""
        if self.reward_bounds is not None:
            lo, hi = self.reward_bounds
            if hi <= lo:
                raise ValueError("reward_bounds must be increasing")
            return float(lo), float(hi)
        u = self.radio.num_ues
        return (
            u * math.log10(self.radio.rate_floor_bps),
            u * math.log10(self.radio.max_rate_bps()),
        )


def normalize_reward(fair_rate_value: float, bounds: tuple[float, float]) -> float:
    """Min-max map of the fair rate onto [0, 1], clamped at both ends."""
    lo, hi = bounds
    if hi <= lo:
        raise ValueError("reward bounds must satisfy min < max")
    return float(np.clip((fair_rate_value - lo) / (hi - lo), 0.0, 1.0))


def apply_action(
    uav_xy: np.ndarray, action: ActionCommand, half_width_m: float, r_max_m: float
) -> np.ndarray:
    """Move the UAV by the decoded command, clamped to the arena."""
    if not -180.0 <= action.direction_deg < 180.0:
        raise ValueError(f"direction {action.direction_deg} outside [-180, 180)")
    if not 0.0 <= action.magnitude_m <= r_max_m:
        raise ValueError(f"magnitude {action.magnitude_m} outside [0, {r_max_m}]")
    theta = math.radians(action.direction_deg)
    moved = uav_xy + action.magnitude_m * np.array([math.cos(theta), math.sin(theta)])
    return np.clip(moved, -half_width_m, half_width_m)


class UavPlacementEnv:
    """reset()/step() episodic simulator for a single serving UAV.

    World randomness (mobility, shadowing, fading, AoA noise, UAV start)
    is derived from the reset seed through independent named streams, one
    per link, so runs are reproducible and links could be evaluated in
    parallel.
    """

    def __init__(self, config: EnvConfig):
        self.config = config
        self.noise_w = mt.thermal_noise_w(
            config.radio, config.radio.bandwidth_hz / config.channel.num_resources
        )
        self._reward_bounds = config.effective_reward_bounds()
        self._reseed_source: np.random.SeedSequence | None = None
        self.frame_idx = 0
        self.done = True
        self.ues: list[mb.UeKinematics] = []
        self.links: list[ch.LinkGainState] = []
        self.uav_xy = np.zeros(2)
        self._history: list[np.ndarray] = []

    @property
    def observation_size(self) -> int:
        return self.config.observation_size()

    def reset(self, seed=None) -> np.ndarray:
        """Start a new episode; same seed means an identical episode."""
        if seed is not None:
            root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
            self._reseed_source = root.spawn(1)[0]
        elif self._reseed_source is not None:
            root = self._reseed_source
            self._reseed_source = root.spawn(1)[0]
        else:
            raise ValueError("first reset needs an explicit seed")

        cfg = self.config
        num_ues = cfg.radio.num_ues
        streams = root.spawn(3 + num_ues)
        self._rng_mobility = np.random.default_rng(streams[0])
        self._rng_uav = np.random.default_rng(streams[1])
        self._rng_aoa = np.random.default_rng(streams[2])
        self._rng_links = [np.random.default_rng(s) for s in streams[3:]]

        scenario = cfg.scenario
        if scenario.num_ues != num_ues:
            raise ValueError("scenario.num_ues must match radio.num_ues")
        self.ues = mb.init_ues(scenario, self._rng_mobility)
        half = scenario.area_half_width_m
        if cfg.uav_start == "center":
            self.uav_xy = np.zeros(2)
        else:
            self.uav_xy = self._rng_uav.uniform(-half, half, size=2)
        self.links = [
            ch.new_link_state(self._ue_pos3(ue), self._uav_pos3(), rng, cfg.channel)
            for ue, rng in zip(self.ues, self._rng_links)
        ]
        self.frame_idx = 0
        self.done = False
        frame = self._frame(self._measure())
        self._history = [frame.copy() for _ in range(cfg.memory + 1)]
        return self._observation()

    def step(self, action: ActionCommand) -> StepResult:
        """Advance one frame: move UAV, move UEs, refresh channel, measure."""
        if self.done:
            raise RuntimeError("step() called on a finished episode; call reset()")
        cfg = self.config
        scenario = cfg.scenario
        self.uav_xy = apply_action(
            self.uav_xy, action, scenario.area_half_width_m, cfg.r_max_m
        )
        mb.step_ues(self.ues, scenario, scenario.time_step_s, self._rng_mobility)
        uav3 = self._uav_pos3()
        for ue, link, rng in zip(self.ues, self.links, self._rng_links):
            ch.advance_link(link, self._ue_pos3(ue), uav3, rng, cfg.channel)

        measurement = self._measure()
        self._history.insert(0, self._frame(measurement))
        self._history.pop()
        self.frame_idx += 1
        self.done = self.frame_idx >= cfg.frames_per_episode
        reward = normalize_reward(measurement.fair_rate, self._reward_bounds)
        info = {
            "frame": self.frame_idx,
            "uav_x": float(self.uav_xy[0]),
            "uav_y": float(self.uav_xy[1]),
            "fair_rate": measurement.fair_rate,
            "per_ue_rate": measurement.per_ue_rate,
            "mean_throughput_bps": float(measurement.per_ue_rate.mean()),
            "reward": reward,
        }
        return StepResult(self._observation(), reward, self.done, info)

    # ---- internals ----

    def _uav_pos3(self) -> np.ndarray:
        return np.array([self.uav_xy[0], self.uav_xy[1], self.config.uav_altitude_m])

    def _ue_pos3(self, ue: mb.UeKinematics) -> np.ndarray:
        return np.array([ue.position[0], ue.position[1], self.config.ue_height_m])

    def _measure(self) -> mt.LinkMeasurement:
        """SINR, rate and AoA for every UE at the current geometry.

        Vectorized over UEs; kept numerically identical to composing the
        per-link channel/metrics operations (pinned by a unit test).
        """
        cfg = self.config
        par = cfg.channel
        radio = cfg.radio
        tx_w = par.tx_power_per_resource_w()
        dx = np.array([ue.position[0] for ue in self.ues]) - self.uav_xy[0]
        dy = np.array([ue.position[1] for ue in self.ues]) - self.uav_xy[1]
        dz = cfg.ue_height_m - cfg.uav_altitude_m
        distances = np.sqrt(dx * dx + dy * dy + dz * dz)

        loss_db = par.pathloss_intercept_db + par.pathloss_slope_db * np.log10(
            distances / 1000.0
        )
        fixed_db = (
            par.bs_antenna_gain_dbi
            - par.o2i_loss_db
            + par.ue_antenna_gain_dbi
            + np.array([link.shadow_db for link in self.links])
        )
        scalar_gain = 10.0 ** ((fixed_db - loss_db) / 10.0)  # (U,)
        fading = np.stack([link.fading_gains for link in self.links])  # (U, K)
        per_resource_sinr = (tx_w / self.noise_w) * scalar_gain[:, None] * fading
        sinrs = np.minimum(per_resource_sinr.mean(axis=1), radio.sinr_cap)
        rates = np.maximum(
            (radio.bandwidth_hz / radio.num_ues) * np.log2(1.0 + sinrs),
            radio.rate_floor_bps,
        )

        true_deg = np.degrees(np.arctan2(dy, dx))
        true_deg[(dx == 0.0) & (dy == 0.0)] = 0.0  # coincident fallback
        noise = self._rng_aoa.normal(0.0, radio.aoa_noise_std_deg, size=len(self.ues))
        aoas = (true_deg + noise + 180.0) % 360.0 - 180.0

        return mt.LinkMeasurement(
            per_ue_effective_sinr=sinrs,
            per_ue_rate=rates,
            per_ue_aoa=aoas,
            fair_rate=float(np.sum(np.log10(rates))),
        )

    def _normalize_sinr_db(self, db: np.ndarray) -> np.ndarray:
        lo, hi = self.config.sinr_db_norm_range
        return np.clip(2.0 * (db - lo) / (hi - lo) - 1.0, -1.0, 1.0)

    def _frame(self, measurement: mt.LinkMeasurement) -> np.ndarray:
        """One history entry; symmetric in the UEs so identity never leaks."""
        cfg = self.config
        half = cfg.scenario.area_half_width_m
        mean_aoa, std_aoa = mt.aoa_circular_stats(
            measurement.per_ue_aoa, cfg.aoa_std_cap_deg
        )
        db = 10.0 * np.log10(np.maximum(measurement.per_ue_effective_sinr, 1e-12))
        if cfg.sinr_state_mode == "per_ue":
            sinr_entries = self._normalize_sinr_db(db)
        else:
            sinr_entries = self._normalize_sinr_db(np.array([db.mean()]))
        return np.concatenate(
            [
                self.uav_xy / half,
                sinr_entries,
                [mean_aoa / 180.0, std_aoa / cfg.aoa_std_cap_deg],
            ]
        )

    def _observation(self) -> np.ndarray:
        return np.concatenate(self._history)
