"""Configuration tests: presets, JSON round-trip, validation messages."""

import json

import pytest

from uavbs.config import (
    ConfigError,
    ScenarioConfig,
    config_from_dict,
    config_to_dict,
    default_config,
    load_config,
    save_config,
)
from uavbs.mobility import ScenarioKind


class TestPresets:
    @pytest.mark.parametrize("kind", [k.value for k in ScenarioKind])
    def test_all_scenarios_have_presets(self, kind):
        cfg = default_config(kind)
        cfg.validate()
        assert cfg.env.scenario.kind == ScenarioKind(kind)
        assert cfg.ppo.episodes_total == 4000

    def test_full_profile(self):
        cfg = default_config("straight_random", profile="full")
        assert cfg.ppo.episodes_total == 12_000

    def test_core_hyperparameters_pinned(self):
        cfg = default_config("no_move")
        assert cfg.ppo.discount == 0.99
        assert cfg.ppo.gae_lambda == 0.95
        assert cfg.ppo.clip_epsilon == 0.2
        assert cfg.ppo.learning_rate == 3e-4
        assert cfg.ppo.hidden_sizes == (128, 128, 128)
        assert cfg.ppo.max_grad_norm == 1.0
        assert cfg.env.memory == 4
        assert cfg.env.frames_per_episode == 128
        assert cfg.env.radio.bandwidth_hz == 10e6
        assert cfg.env.channel.carrier_frequency_hz == 2e9

    def test_unknown_profile(self):
        with pytest.raises(ConfigError):
            default_config("no_move", profile="galactic")


class TestRoundTrip:
    def test_save_load_identity(self, tmp_path):
        cfg = default_config("circular")
        cfg.seeds = [7, 8]
        cfg.eval_episodes = 5
        path = tmp_path / "config.json"
        save_config(cfg, path)
        loaded = load_config(path)
        assert config_to_dict(loaded) == config_to_dict(cfg)

    def test_dict_round_trip(self):
        cfg = default_config("hotspot_random")
        again = config_from_dict(config_to_dict(cfg))
        assert config_to_dict(again) == config_to_dict(cfg)

    def test_json_is_plain_data(self, tmp_path):
        cfg = default_config("no_move")
        path = tmp_path / "config.json"
        save_config(cfg, path)
        data = json.loads(path.read_text())
        assert data["env"]["scenario"]["kind"] == "no_move"
        assert data["ppo"]["learning_rate"] == 3e-4


class TestValidation:
    def test_zero_episodes_rejected(self):
        cfg_dict = config_to_dict(default_config("no_move"))
        cfg_dict["ppo"]["episodes_total"] = 0
        with pytest.raises(ConfigError, match="episodes_total"):
            config_from_dict(cfg_dict)

    def test_unknown_field_named(self):
        cfg_dict = config_to_dict(default_config("no_move"))
        cfg_dict["env"]["warp_factor"] = 9
        with pytest.raises(ConfigError, match="warp_factor"):
            config_from_dict(cfg_dict)

    def test_bad_nested_value_names_path(self):
        cfg_dict = config_to_dict(default_config("no_move"))
        cfg_dict["env"]["frames_per_episode"] = 0
        with pytest.raises(ConfigError, match="config.env"):
            config_from_dict(cfg_dict)

    def test_empty_seeds_rejected(self):
        cfg = default_config("no_move")
        cfg.seeds = []
        with pytest.raises(ConfigError, match="seeds"):
            cfg.validate()

    def test_frames_mismatch_rejected(self):
        cfg = default_config("no_move")
        cfg.ppo.frames_per_episode = 64
        with pytest.raises(ConfigError, match="frames_per_episode"):
            cfg.validate()

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_config(path)

    def test_scenario_kind_string_accepted(self):
        data = config_to_dict(default_config("straight_90"))
        cfg = config_from_dict(data)
        assert cfg.env.scenario.kind is ScenarioKind.STRAIGHT_90
