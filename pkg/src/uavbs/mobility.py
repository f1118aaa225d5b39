"""UE mobility: scenario initialization and per-frame stepping.

Six scenario families are supported, from a static cluster to a mixed
hotspot with independently roaming UEs. Linear movers reflect off the
arena boundary; the circular scenario orbits the origin instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

CLUSTER_SIDE_M = 10.0  # UE clusters start inside a 10 m x 10 m square
CIRCLE_RADIUS_M = 200.0


class ScenarioKind(str, Enum):
    NO_MOVE = "no_move"
    STRAIGHT_RANDOM = "straight_random"
    CIRCULAR = "circular"
    STRAIGHT_90 = "straight_90"
    STRAIGHT_180 = "straight_180"
    HOTSPOT_RANDOM = "hotspot_random"


@dataclass
class MobilityScenario:
    kind: ScenarioKind = ScenarioKind.NO_MOVE
    num_ues: int = 10
    area_half_width_m: float = 100.0
    ue_speed_mps: float = 8.0  # cluster speed; hotspot draws from [0, ue_speed]
    time_step_s: float = 1.0

    def __post_init__(self) -> None:
        self.kind = ScenarioKind(self.kind)
        if self.num_ues < 1:
            raise ValueError("num_ues must be >= 1")
        if self.area_half_width_m <= 0:
            raise ValueError("area_half_width_m must be > 0")
        if self.ue_speed_mps < 0:
            raise ValueError("ue_speed_mps must be >= 0")
        if self.time_step_s <= 0:
            raise ValueError("time_step_s must be > 0")


def scenario_for(kind: ScenarioKind | str, **overrides) -> MobilityScenario:
    """Scenario with per-kind defaults applied.

    The circular orbit (radius 200 m plus up to ~14 m of cluster offset)
    cannot fit the default 200 m x 200 m arena, so that scenario widens
    the arena to keep every UE in bounds.
    """
    kind = ScenarioKind(kind)
    defaults: dict = {"kind": kind}
    if kind is ScenarioKind.CIRCULAR:
        defaults["area_half_width_m"] = CIRCLE_RADIUS_M + CLUSTER_SIDE_M * math.sqrt(2.0)
    defaults.update(overrides)
    return MobilityScenario(**defaults)


@dataclass
class UeKinematics:
    position: np.ndarray  # (2,) metres; height is handled by the environment
    velocity: np.ndarray  # (2,) m/s
    group_id: int = 0
    circular_phase: float | None = None  # radians, circular scenario only


def reflect(coordinate: float, low: float, high: float) -> tuple[float, bool]:
    """Mirror a coordinate back inside [low, high].

    Returns the reflected coordinate and whether a boundary was hit (the
    caller flips the matching velocity component). Large overshoots are
    folded repeatedly.
    """
    if high <= low:
        raise ValueError("high must be > low")
    flipped = False
    while coordinate > high or coordinate < low:
        if coordinate > high:
            coordinate = 2.0 * high - coordinate
        else:
            coordinate = 2.0 * low - coordinate
        flipped = not flipped
    return coordinate, flipped


def _cluster_positions(
    center: np.ndarray, count: int, rng: np.random.Generator
) -> np.ndarray:
    half = CLUSTER_SIDE_M / 2.0
    return center + rng.uniform(-half, half, size=(count, 2))


def _heading_velocity(heading_rad: float, speed: float) -> np.ndarray:
    return speed * np.array([math.cos(heading_rad), math.sin(heading_rad)])


def init_ues(scenario: MobilityScenario, rng: np.random.Generator) -> list[UeKinematics]:
    """Place UEs for the first frame of an episode."""
    kind = scenario.kind
    n = scenario.num_ues
    speed = scenario.ue_speed_mps
    ues: list[UeKinematics] = []

    if kind in (ScenarioKind.NO_MOVE, ScenarioKind.STRAIGHT_RANDOM):
        positions = _cluster_positions(np.zeros(2), n, rng)
        if kind is ScenarioKind.NO_MOVE:
            velocity = np.zeros(2)
        else:
            velocity = _heading_velocity(rng.uniform(0.0, 2.0 * math.pi), speed)
        for pos in positions:
            ues.append(UeKinematics(position=pos, velocity=velocity.copy(), group_id=0))

    elif kind is ScenarioKind.CIRCULAR:
        # cluster square at x in [0, 10], y in [-200, -190]; shared phase -pi/2
        xs = rng.uniform(0.0, CLUSTER_SIDE_M, size=n)
        ys = rng.uniform(-CIRCLE_RADIUS_M, -CIRCLE_RADIUS_M + CLUSTER_SIDE_M, size=n)
        phase = -math.pi / 2.0
        for x, y in zip(xs, ys):
            ues.append(
                UeKinematics(
                    position=np.array([x, y]),
                    velocity=speed * np.array([-math.sin(phase), math.cos(phase)]),
                    group_id=0,
                    circular_phase=phase,
                )
            )

    elif kind in (ScenarioKind.STRAIGHT_90, ScenarioKind.STRAIGHT_180):
        gap = math.pi / 2.0 if kind is ScenarioKind.STRAIGHT_90 else math.pi
        heading = rng.uniform(0.0, 2.0 * math.pi)
        sizes = [n - n // 2, n // 2]
        for group, (size, theta) in enumerate(zip(sizes, [heading, heading + gap])):
            positions = _cluster_positions(np.zeros(2), size, rng)
            velocity = _heading_velocity(theta, speed)
            for pos in positions:
                ues.append(UeKinematics(position=pos, velocity=velocity.copy(), group_id=group))

    elif kind is ScenarioKind.HOTSPOT_RANDOM:
        half_width = scenario.area_half_width_m
        cluster_size = n - n // 2
        cluster_speed = rng.uniform(0.0, speed)
        velocity = _heading_velocity(rng.uniform(0.0, 2.0 * math.pi), cluster_speed)
        for pos in _cluster_positions(np.zeros(2), cluster_size, rng):
            ues.append(UeKinematics(position=pos, velocity=velocity.copy(), group_id=0))
        for _ in range(n - cluster_size):
            pos = rng.uniform(-half_width, half_width, size=2)
            vel = _heading_velocity(
                rng.uniform(0.0, 2.0 * math.pi), rng.uniform(0.0, speed)
            )
            ues.append(UeKinematics(position=pos, velocity=vel, group_id=1))

    else:  # pragma: no cover - exhausted enum
        raise ValueError(f"unknown scenario kind {kind}")
    return ues


def step_ues(
    ues: list[UeKinematics],
    scenario: MobilityScenario,
    dt: float,
    rng: np.random.Generator,
) -> list[UeKinematics]:
    """Advance every UE by one frame, reflecting off the arena boundary."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    kind = scenario.kind
    half_width = scenario.area_half_width_m

    if kind is ScenarioKind.NO_MOVE:
        return ues

    if kind is ScenarioKind.CIRCULAR:
        advance = scenario.ue_speed_mps * dt / CIRCLE_RADIUS_M
        for ue in ues:
            old_phase = ue.circular_phase
            offset = ue.position - CIRCLE_RADIUS_M * np.array(
                [math.cos(old_phase), math.sin(old_phase)]
            )
            phase = old_phase + advance
            ue.circular_phase = phase
            ue.position = offset + CIRCLE_RADIUS_M * np.array(
                [math.cos(phase), math.sin(phase)]
            )
            ue.velocity = scenario.ue_speed_mps * np.array(
                [-math.sin(phase), math.cos(phase)]
            )
        return ues

    redraw_on_reflect = kind is ScenarioKind.HOTSPOT_RANDOM
    for ue in ues:
        ue.position = ue.position + ue.velocity * dt
        hit = False
        for axis in range(2):
            coord, flipped = reflect(float(ue.position[axis]), -half_width, half_width)
            ue.position[axis] = coord
            if flipped:
                ue.velocity[axis] = -ue.velocity[axis]
                hit = True
        if hit and redraw_on_reflect and ue.group_id == 1:
            # independent hotspot UEs pick a fresh course at the wall
            ue.velocity = _heading_velocity(
                rng.uniform(0.0, 2.0 * math.pi),
                rng.uniform(0.0, scenario.ue_speed_mps),
            )
    return ues
