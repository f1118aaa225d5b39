"""Harness tests: metrics files, determinism, resume, eval/baseline/sweep, CLI."""

import json
from pathlib import Path

import numpy as np
import pytest

from uavbs.cli import main as cli_main
from uavbs.config import default_config, save_config
from uavbs.harness import (
    MetricsWriter,
    clone_config,
    read_trace,
    run_eval,
    run_noise_sweep,
    run_static_baseline,
    run_train,
    train_single_seed,
)
from uavbs.ppo import load_checkpoint


def tiny_config(scenario="no_move"):
    cfg = default_config(scenario)
    cfg.env.frames_per_episode = 12
    cfg.ppo.frames_per_episode = 12
    cfg.ppo.hidden_sizes = (16, 16)
    cfg.ppo.episodes_total = 3
    cfg.ppo.minibatch_size = 8
    cfg.env.memory = 2
    cfg.env.channel.num_resources = 8
    cfg.seeds = [1]
    cfg.eval_episodes = 2
    cfg.checkpoint_interval = 2
    return cfg


class TestMetricsWriter:
    def test_jsonl_header_once(self, tmp_path):
        path = tmp_path / "m.jsonl"
        with MetricsWriter(path) as writer:
            writer.write_metrics({"episode": 0, "x": 1.5})
            writer.write_metrics({"episode": 1, "x": 2.5})
        lines = path.read_text().splitlines()
        assert len(lines) == 3
        assert json.loads(lines[0])["schema"] == "uavbs-metrics"
        assert json.loads(lines[1]) == {"episode": 0, "x": 1.5}

    def test_csv_schema_and_column_check(self, tmp_path):
        path = tmp_path / "m.csv"
        with MetricsWriter(path, columns=["a", "b"]) as writer:
            writer.write_metrics({"a": 1, "b": 2})
            with pytest.raises(ValueError, match="missing columns"):
                writer.write_metrics({"a": 1})
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# schema=")
        assert lines[1] == "a,b"
        assert lines[2] == "1,2"

    def test_refuses_existing_file(self, tmp_path):
        path = tmp_path / "m.jsonl"
        MetricsWriter(path).close()
        with pytest.raises(FileExistsError):
            MetricsWriter(path)
        MetricsWriter(path, overwrite=True).close()

    def test_rows_flushed_immediately(self, tmp_path):
        path = tmp_path / "m.jsonl"
        writer = MetricsWriter(path)
        writer.write_metrics({"episode": 0})
        assert len(path.read_text().splitlines()) == 2
        writer.close()

    def test_io_error_names_path(self, tmp_path):
        missing_dir = tmp_path / "no_such_dir" / "m.jsonl"
        with pytest.raises(OSError, match="no_such_dir"):
            MetricsWriter(missing_dir)


class TestTrainDeterminism:
    def test_metrics_byte_identical(self, tmp_path):
        cfg = tiny_config()
        a = train_single_seed(cfg, 5, tmp_path / "a")
        b = train_single_seed(cfg, 5, tmp_path / "b")
        assert Path(a["metrics"]).read_bytes() == Path(b["metrics"]).read_bytes()

    def test_different_seeds_differ(self, tmp_path):
        cfg = tiny_config()
        a = train_single_seed(cfg, 5, tmp_path / "a")
        b = train_single_seed(cfg, 6, tmp_path / "b")
        assert Path(a["metrics"]).read_bytes() != Path(b["metrics"]).read_bytes()

    def test_resume_matches_uninterrupted(self, tmp_path):
        cfg = tiny_config()
        cfg.ppo.episodes_total = 4
        full = train_single_seed(cfg, 3, tmp_path / "full")
        # interrupted run: stop after 2 episodes, resume from the checkpoint
        train_single_seed(cfg, 3, tmp_path / "part", episodes_total=2)
        agent, episode = load_checkpoint(tmp_path / "part" / "checkpoint.bin")
        assert episode == 2
        resumed = train_single_seed(
            cfg, 3, tmp_path / "part", agent=agent, start_episode=episode
        )
        full_agent, _ = load_checkpoint(full["checkpoint"])
        resumed_agent, _ = load_checkpoint(resumed["checkpoint"])
        for a, b in zip(full_agent.policy.params(), resumed_agent.policy.params()):
            np.testing.assert_array_equal(a, b)
        for a, b in zip(full_agent.critic.params(), resumed_agent.critic.params()):
            np.testing.assert_array_equal(a, b)
        assert full_agent.rng.bit_generator.state == resumed_agent.rng.bit_generator.state


class TestRunTrain:
    def test_writes_layout(self, tmp_path):
        cfg = tiny_config()
        cfg.seeds = [1, 2]
        results = run_train(cfg, tmp_path / "run")
        assert (tmp_path / "run" / "config.json").exists()
        for res, seed in zip(results, (1, 2)):
            assert res["seed"] == seed
            assert Path(res["checkpoint"]).exists()
            lines = Path(res["metrics"]).read_text().splitlines()
            assert len(lines) == 1 + cfg.ppo.episodes_total
            record = json.loads(lines[-1])
            assert {"episode", "mean_reward", "mean_throughput_bps", "policy_loss",
                    "value_loss", "entropy", "approx_kl", "clip_fraction"} <= set(record)

    def test_refuses_existing_output(self, tmp_path):
        cfg = tiny_config()
        run_train(cfg, tmp_path / "run")
        with pytest.raises(FileExistsError):
            run_train(cfg, tmp_path / "run")
        run_train(cfg, tmp_path / "run", overwrite=True)


class TestEvalAndBaseline:
    def test_eval_reproducible(self, tmp_path):
        cfg = tiny_config()
        res = train_single_seed(cfg, 1, tmp_path / "train")
        e1 = run_eval(cfg, res["checkpoint"], out_dir=tmp_path / "e1", seed=1)
        e2 = run_eval(cfg, res["checkpoint"], out_dir=tmp_path / "e2", seed=1)
        assert e1.mean_throughput_bps == e2.mean_throughput_bps
        assert (tmp_path / "e1" / "eval.csv").read_bytes() == (
            tmp_path / "e2" / "eval.csv"
        ).read_bytes()
        assert len(e1.per_episode_throughput_bps) == cfg.eval_episodes

    def test_dimension_mismatch_rejected(self, tmp_path):
        cfg = tiny_config()
        res = train_single_seed(cfg, 1, tmp_path / "train")
        other = tiny_config()
        other.env.memory = 4  # different observation size
        with pytest.raises(ValueError, match="observation size"):
            run_eval(other, res["checkpoint"], seed=1)

    def test_baseline_reproducible_and_capped(self, tmp_path):
        cfg = tiny_config()
        b1 = run_static_baseline(cfg, seed=1)
        b2 = run_static_baseline(cfg, seed=1)
        assert b1.mean_throughput_bps == b2.mean_throughput_bps
        assert b1.mean_throughput_bps <= 8e6

    def test_trace_recomputation_oracle(self, tmp_path):
        cfg = tiny_config()
        cfg.eval_episodes = 3
        res = train_single_seed(cfg, 1, tmp_path / "train")
        ev = run_eval(cfg, res["checkpoint"], out_dir=tmp_path / "eval", seed=1, trace=True)
        num_ues = cfg.env.radio.num_ues
        per_episode = []
        for episode in range(cfg.eval_episodes):
            rows = read_trace(tmp_path / "eval" / f"trace_ep{episode:03d}.csv")
            assert len(rows) == cfg.env.frames_per_episode
            frame_means = [
                np.mean([row[f"rate_{u}"] for u in range(num_ues)]) for row in rows
            ]
            per_episode.append(np.mean(frame_means))
        recomputed = float(np.mean(per_episode))
        assert abs(recomputed - ev.mean_throughput_bps) <= 1e-9 * ev.mean_throughput_bps

    def test_summary_written(self, tmp_path):
        cfg = tiny_config()
        res = train_single_seed(cfg, 1, tmp_path / "train")
        run_eval(cfg, res["checkpoint"], out_dir=tmp_path / "eval", seed=1)
        summary = json.loads((tmp_path / "eval" / "summary.json").read_text())
        assert {"seed", "episodes", "mean_throughput_bps", "std_throughput_bps",
                "mean_reward", "wall_clock_sec"} <= set(summary)


class TestSweep:
    def test_eval_only_sweep_zero_noise_matches_plain_eval(self, tmp_path):
        cfg = tiny_config()
        cfg.aoa_noise_sweep = [0.0, 100.0]
        res = train_single_seed(cfg, 1, tmp_path / "train")
        table = run_noise_sweep(cfg, tmp_path / "sweep", checkpoint_path=res["checkpoint"])
        plain = run_eval(cfg, res["checkpoint"], seed=1)
        assert table[0]["noise_std_deg"] == 0.0
        assert table[0]["mean_throughput_bps"] == pytest.approx(
            plain.mean_throughput_bps, rel=1e-12
        )
        lines = (tmp_path / "sweep" / "sweep.csv").read_text().splitlines()
        assert lines[1] == "noise_std_deg,mean_throughput_bps,std_throughput_bps"
        assert len(lines) == 2 + 2

    def test_training_sweep_runs_per_level(self, tmp_path):
        cfg = tiny_config()
        cfg.aoa_noise_sweep = [0.0, 50.0]
        table = run_noise_sweep(cfg, tmp_path / "sweep")
        assert [row["noise_std_deg"] for row in table] == [0.0, 50.0]
        for noise in ("noise0", "noise50"):
            assert (tmp_path / "sweep" / noise / "seed0001" / "checkpoint.bin").exists()

    def test_clone_config_is_deep(self):
        cfg = tiny_config()
        clone = clone_config(cfg)
        clone.env.radio.aoa_noise_std_deg = 55.0
        assert cfg.env.radio.aoa_noise_std_deg == 0.0


class TestCli:
    def test_train_eval_baseline_flow(self, tmp_path, capsys):
        cfg = tiny_config()
        cfg_path = tmp_path / "config.json"
        save_config(cfg, cfg_path)
        assert cli_main([
            "train", "--config", str(cfg_path), "--out", str(tmp_path / "run"),
            "--seed", "1", "--log-every", "0",
        ]) == 0
        checkpoint = tmp_path / "run" / "seed0001" / "checkpoint.bin"
        assert checkpoint.exists()
        assert cli_main([
            "eval", "--config", str(cfg_path), "--checkpoint", str(checkpoint),
            "--out", str(tmp_path / "eval"), "--seed", "1",
        ]) == 0
        assert (tmp_path / "eval" / "eval.csv").exists()
        assert cli_main([
            "baseline", "--config", str(cfg_path), "--out", str(tmp_path / "base"),
            "--seed", "1", "--episodes", "2",
        ]) == 0
        out = capsys.readouterr().out
        assert "Mbps" in out

    def test_errors_exit_nonzero(self, tmp_path):
        assert cli_main([
            "train", "--config", str(tmp_path / "missing.json"),
            "--out", str(tmp_path / "x"),
        ]) == 2
        cfg = tiny_config()
        cfg_path = tmp_path / "config.json"
        save_config(cfg, cfg_path)
        out_dir = tmp_path / "dup"
        assert cli_main(["train", "--config", str(cfg_path), "--out", str(out_dir),
                         "--seed", "1", "--log-every", "0"]) == 0
        assert cli_main(["train", "--config", str(cfg_path), "--out", str(out_dir),
                         "--seed", "1", "--log-every", "0"]) == 2

    def test_scenario_preset_without_config(self, tmp_path):
        # full preset is heavy; just verify the parser path with --episodes=1
        rc = cli_main([
            "baseline", "--scenario", "no_move", "--out", str(tmp_path / "b"),
            "--seed", "1", "--episodes", "1",
        ])
        assert rc == 0

    def test_sweep_eval_only(self, tmp_path, capsys):
        cfg = tiny_config()
        cfg.aoa_noise_sweep = [0.0, 25.0]
        cfg_path = tmp_path / "config.json"
        save_config(cfg, cfg_path)
        res = train_single_seed(cfg, 1, tmp_path / "train")
        rc = cli_main([
            "sweep", "--config", str(cfg_path), "--out", str(tmp_path / "sweep"),
            "--checkpoint", res["checkpoint"], "--seed", "1",
        ])
        assert rc == 0
        assert "noise std" in capsys.readouterr().out
        assert (tmp_path / "sweep" / "sweep.csv").exists()
