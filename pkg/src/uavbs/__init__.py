"""Measurement-driven UAV base-station placement: simulator plus PPO trainer."""

from .channel import ChannelParams, LinkGainState
from .config import ConfigError, ScenarioConfig, default_config, load_config, save_config
from .environment import ActionCommand, EnvConfig, StepResult, UavPlacementEnv
from .metrics import LinkMeasurement, RadioConfig
from .mobility import MobilityScenario, ScenarioKind, UeKinematics
from .ppo import PpoAgent, PpoHyperParams, RolloutBuffer

__all__ = [
    "ActionCommand",
    "ChannelParams",
    "ConfigError",
    "EnvConfig",
    "LinkGainState",
    "LinkMeasurement",
    "MobilityScenario",
    "PpoAgent",
    "PpoHyperParams",
    "RadioConfig",
    "RolloutBuffer",
    "ScenarioConfig",
    "ScenarioKind",
    "StepResult",
    "UavPlacementEnv",
    "UeKinematics",
    "default_config",
    "load_config",
    "save_config",
]

__version__ = "0.1.0"
