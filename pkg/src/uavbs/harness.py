"""Experiment runners: training, evaluation, static baseline, noise sweep.

Every random draw descends from (seed, purpose tag, episode index), so a
run is fully reproducible from its config file plus seed, and PPO and
baseline evaluations see pairwise-identical worlds.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import ConfigError, ScenarioConfig, config_from_dict, config_to_dict, save_config
from .environment import ActionCommand, UavPlacementEnv
from .ppo import PpoAgent, RolloutBuffer, load_checkpoint, save_checkpoint


@dataclass
class RunSummary:
    """Aggregate result of one evaluation (or baseline) run."""

    seed: int
    episodes: int
    deterministic: bool
    mean_throughput_bps: float
    std_throughput_bps: float
    mean_reward: float
    wall_clock_sec: float
    per_episode_throughput_bps: list[float] = field(default_factory=list)
    per_episode_reward: list[float] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "episodes": self.episodes,
            "deterministic": self.deterministic,
            "mean_throughput_bps": self.mean_throughput_bps,
            "std_throughput_bps": self.std_throughput_bps,
            "mean_reward": self.mean_reward,
            "wall_clock_sec": self.wall_clock_sec,
        }


# purpose tags keep the train/eval/agent random streams disjoint
_TRAIN_TAG = 101
_EVAL_TAG = 202
_AGENT_TAG = 303

METRICS_SCHEMA = {"schema": "uavbs-metrics", "version": 1}
CSV_SCHEMA_LINE = "# schema=uavbs-csv-v1"


def episode_seed(master_seed: int, tag: int, episode: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master_seed), int(tag), int(episode)])


def clone_config(cfg: ScenarioConfig) -> ScenarioConfig:
    """Deep copy through the JSON representation."""
    return config_from_dict(config_to_dict(cfg))


class MetricsWriter:
    """Append-only metrics file (JSON lines or CSV) with a schema header.

    Refuses to clobber an existing file unless ``overwrite`` is set; every
    record is flushed so partial runs still leave usable files.
    """

    def __init__(self, path, columns: list[str] | None = None, overwrite: bool = False):
        self.path = Path(path)
        self.columns = columns  # None -> JSON lines
        if self.path.exists() and not overwrite:
            raise FileExistsError(
                f"{self.path} already exists; re-run with overwrite enabled"
            )
        try:
            self._fh = open(self.path, "w", newline="")
            if columns is None:
                self._fh.write(json.dumps(METRICS_SCHEMA) + "\n")
            else:
                self._fh.write(CSV_SCHEMA_LINE + "\n")
                self._fh.write(",".join(columns) + "\n")
            self._fh.flush()
        except OSError as exc:
            raise OSError(f"cannot open metrics file {self.path}: {exc}") from exc

    def write_metrics(self, record: dict) -> None:
        try:
            if self.columns is None:
                self._fh.write(json.dumps(record) + "\n")
            else:
                missing = [c for c in self.columns if c not in record]
                if missing:
                    raise ValueError(f"record missing columns {missing}")
                self._fh.write(",".join(repr(record[c]) for c in self.columns) + "\n")
            self._fh.flush()
        except OSError as exc:
            raise OSError(f"cannot write metrics file {self.path}: {exc}") from exc

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


def _prepare_dir(out_dir, overwrite: bool) -> Path:
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()) and not overwrite:
        raise FileExistsError(
            f"output directory {out} exists and is not empty; pass --overwrite"
        )
    out.mkdir(parents=True, exist_ok=True)
    return out


def collect_episode(
    env: UavPlacementEnv,
    agent: PpoAgent | None,
    seed: np.random.SeedSequence,
    deterministic: bool = False,
    trace_writer: MetricsWriter | None = None,
) -> tuple[RolloutBuffer, dict, np.ndarray]:
    """Roll one episode; a None agent pins the UAV (zero-magnitude actions)."""
    obs = env.reset(seed=seed)
    buffer = RolloutBuffer()
    rewards = []
    throughputs = []
    while True:
        if agent is None:
            command, z, log_prob, value = ActionCommand(0.0, 0.0), np.zeros(2), 0.0, 0.0
        else:
            command, z, log_prob, value = agent.act(obs, deterministic=deterministic)
        result = env.step(command)
        buffer.add(obs, z, command, log_prob, result.reward, value)
        rewards.append(result.reward)
        throughputs.append(result.info["mean_throughput_bps"])
        if trace_writer is not None:
            row = {
                "frame": result.info["frame"],
                "uav_x": result.info["uav_x"],
                "uav_y": result.info["uav_y"],
                "fair_rate": result.info["fair_rate"],
                "reward": result.info["reward"],
            }
            for u, rate in enumerate(result.info["per_ue_rate"]):
                row[f"rate_{u}"] = float(rate)
            trace_writer.write_metrics(row)
        obs = result.observation
        if result.done:
            break
    stats = {
        "mean_reward": float(np.mean(rewards)),
        "mean_throughput_bps": float(np.mean(throughputs)),
    }
    return buffer, stats, obs


def train_single_seed(
    cfg: ScenarioConfig,
    seed: int,
    out_dir,
    overwrite: bool = False,
    episodes_total: int | None = None,
    agent: PpoAgent | None = None,
    start_episode: int = 0,
    log_every: int = 0,
) -> dict:
    """Train one seed; returns paths and final diagnostics.

    ``agent``/``start_episode`` allow resuming from a loaded checkpoint;
    episode seeds depend only on (seed, episode index), so a resumed run
    replays exactly the episodes an uninterrupted run would see.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    total = episodes_total if episodes_total is not None else cfg.ppo.episodes_total
    if total < 1:
        raise ConfigError("ppo.episodes_total: must be >= 1")

    env = UavPlacementEnv(cfg.env)
    if agent is None:
        agent_rng = np.random.default_rng(
            np.random.SeedSequence([int(seed), _AGENT_TAG])
        )
        agent = PpoAgent(env.observation_size, cfg.ppo, cfg.env.r_max_m, rng=agent_rng)
    if agent.obs_dim != env.observation_size:
        raise ValueError(
            f"agent observation size {agent.obs_dim} does not match "
            f"environment ({env.observation_size})"
        )

    checkpoint_path = out / "checkpoint.bin"
    metrics_path = out / "metrics.jsonl"
    mode_overwrite = overwrite or start_episode > 0
    writer = MetricsWriter(metrics_path, overwrite=mode_overwrite)
    started = time.perf_counter()
    last_stats: dict = {}
    try:
        for episode in range(start_episode, total):
            buffer, ep_stats, final_obs = collect_episode(
                env, agent, episode_seed(seed, _TRAIN_TAG, episode)
            )
            terminal_value = (
                agent.value(final_obs) if cfg.ppo.terminal_bootstrap == "critic" else 0.0
            )
            buffer.compute_advantages(terminal_value, cfg.ppo)
            update_stats = agent.update(buffer)
            record = {"episode": episode, **ep_stats, **update_stats}
            writer.write_metrics(record)
            last_stats = record
            if (episode + 1) % cfg.checkpoint_interval == 0 and episode + 1 < total:
                save_checkpoint(checkpoint_path, agent, episode + 1)
            if log_every and (episode + 1) % log_every == 0:
                print(
                    f"[seed {seed}] episode {episode + 1}/{total} "
                    f"reward {record['mean_reward']:.3f} "
                    f"throughput {record['mean_throughput_bps'] / 1e6:.2f} Mbps"
                )
        save_checkpoint(checkpoint_path, agent, total)
    finally:
        writer.close()
    return {
        "seed": seed,
        "checkpoint": str(checkpoint_path),
        "metrics": str(metrics_path),
        "episodes": total,
        "wall_clock_sec": time.perf_counter() - started,
        "final": last_stats,
    }


def run_train(
    cfg: ScenarioConfig,
    out_dir,
    overwrite: bool = False,
    episodes_total: int | None = None,
    log_every: int = 0,
) -> list[dict]:
    """Train every configured seed under ``out_dir/seedNNNN``."""
    cfg.validate()
    out = _prepare_dir(out_dir, overwrite)
    save_config(cfg, out / "config.json")
    results = []
    for seed in cfg.seeds:
        results.append(
            train_single_seed(
                cfg,
                seed,
                out / f"seed{seed:04d}",
                overwrite=overwrite,
                episodes_total=episodes_total,
                log_every=log_every,
            )
        )
    return results


def _eval_loop(
    cfg: ScenarioConfig,
    agent: PpoAgent | None,
    seed: int,
    episodes: int,
    out_dir: Path | None,
    deterministic: bool,
    trace: bool,
    overwrite: bool,
) -> dict:
    env_cfg = cfg.env if agent is not None else replace(cfg.env, uav_start="center")
    env = UavPlacementEnv(env_cfg)
    if agent is not None and agent.obs_dim != env.observation_size:
        raise ValueError(
            f"checkpoint observation size {agent.obs_dim} does not match "
            f"environment ({env.observation_size})"
        )
    writer = None
    if out_dir is not None:
        writer = MetricsWriter(
            out_dir / "eval.csv",
            columns=["episode", "mean_throughput_bps", "mean_reward"],
            overwrite=overwrite,
        )
    rows = []
    started = time.perf_counter()
    try:
        for episode in range(episodes):
            trace_writer = None
            if trace and out_dir is not None:
                num_ues = cfg.env.radio.num_ues
                trace_writer = MetricsWriter(
                    out_dir / f"trace_ep{episode:03d}.csv",
                    columns=["frame", "uav_x", "uav_y", "fair_rate"]
                    + [f"rate_{u}" for u in range(num_ues)]
                    + ["reward"],
                    overwrite=overwrite,
                )
            _, stats, _ = collect_episode(
                env,
                agent,
                episode_seed(seed, _EVAL_TAG, episode),
                deterministic=deterministic,
                trace_writer=trace_writer,
            )
            if trace_writer is not None:
                trace_writer.close()
            row = {"episode": episode, **stats}
            rows.append(row)
            if writer is not None:
                writer.write_metrics(row)
    finally:
        if writer is not None:
            writer.close()
    throughputs = np.array([r["mean_throughput_bps"] for r in rows])
    summary = RunSummary(
        seed=seed,
        episodes=episodes,
        deterministic=deterministic,
        mean_throughput_bps=float(throughputs.mean()),
        std_throughput_bps=float(throughputs.std()),
        mean_reward=float(np.mean([r["mean_reward"] for r in rows])),
        wall_clock_sec=time.perf_counter() - started,
        per_episode_throughput_bps=[r["mean_throughput_bps"] for r in rows],
        per_episode_reward=[r["mean_reward"] for r in rows],
    )
    if out_dir is not None:
        (out_dir / "summary.json").write_text(
            json.dumps(summary.to_json_dict(), indent=2) + "\n"
        )
    return summary


def run_eval(
    cfg: ScenarioConfig,
    checkpoint_path,
    out_dir=None,
    seed: int | None = None,
    episodes: int | None = None,
    deterministic: bool = True,
    trace: bool | None = None,
    overwrite: bool = False,
) -> dict:
    """Evaluate a trained checkpoint over seeded deterministic episodes."""
    cfg.validate()
    agent, _ = load_checkpoint(checkpoint_path)
    out = _prepare_dir(out_dir, overwrite) if out_dir is not None else None
    return _eval_loop(
        cfg,
        agent,
        seed if seed is not None else cfg.seeds[0],
        episodes if episodes is not None else cfg.eval_episodes,
        out,
        deterministic,
        cfg.trace if trace is None else trace,
        overwrite,
    )


def run_static_baseline(
    cfg: ScenarioConfig,
    out_dir=None,
    seed: int | None = None,
    episodes: int | None = None,
    trace: bool | None = None,
    overwrite: bool = False,
) -> dict:
    """Same evaluation loop with the UAV pinned at the arena center."""
    cfg.validate()
    out = _prepare_dir(out_dir, overwrite) if out_dir is not None else None
    return _eval_loop(
        cfg,
        None,
        seed if seed is not None else cfg.seeds[0],
        episodes if episodes is not None else cfg.eval_episodes,
        out,
        True,
        cfg.trace if trace is None else trace,
        overwrite,
    )


def run_noise_sweep(
    cfg: ScenarioConfig,
    out_dir,
    checkpoint_path=None,
    overwrite: bool = False,
    episodes_total: int | None = None,
    log_every: int = 0,
) -> list[dict]:
    """Train (or reuse a checkpoint) and evaluate per AoA noise level.

    Writes ``sweep.csv`` with one row per noise std: mean and std of the
    evaluation throughput across all configured seeds.
    """
    cfg.validate()
    if not cfg.aoa_noise_sweep:
        raise ConfigError("aoa_noise_sweep: must not be empty")
    out = _prepare_dir(out_dir, overwrite)
    writer = MetricsWriter(
        out / "sweep.csv",
        columns=["noise_std_deg", "mean_throughput_bps", "std_throughput_bps"],
        overwrite=overwrite,
    )
    table = []
    try:
        for noise_std in cfg.aoa_noise_sweep:
            point_cfg = clone_config(cfg)
            point_cfg.env.radio.aoa_noise_std_deg = float(noise_std)
            point_dir = out / f"noise{noise_std:g}"
            per_seed = []
            for seed in point_cfg.seeds:
                seed_dir = point_dir / f"seed{seed:04d}"
                if checkpoint_path is None:
                    train_res = train_single_seed(
                        point_cfg,
                        seed,
                        seed_dir,
                        overwrite=overwrite,
                        episodes_total=episodes_total,
                        log_every=log_every,
                    )
                    ckpt = train_res["checkpoint"]
                else:
                    ckpt = checkpoint_path
                res = run_eval(
                    point_cfg,
                    ckpt,
                    out_dir=seed_dir / "eval",
                    seed=seed,
                    overwrite=overwrite,
                )
                per_seed.append(res.mean_throughput_bps)
            row = {
                "noise_std_deg": float(noise_std),
                "mean_throughput_bps": float(np.mean(per_seed)),
                "std_throughput_bps": float(np.std(per_seed)),
            }
            writer.write_metrics(row)
            table.append({**row, "per_seed": per_seed})
    finally:
        writer.close()
    return table


def read_trace(path) -> list[dict]:
    """Parse a per-step trace CSV back into float records."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != CSV_SCHEMA_LINE:
            raise ValueError(f"{path}: unexpected schema line {first!r}")
        reader = csv.DictReader(fh)
        return [{k: float(v) for k, v in row.items()} for row in reader]
