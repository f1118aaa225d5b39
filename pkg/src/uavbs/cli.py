"""Command-line entry point: train / eval / baseline / sweep."""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, default_config, load_config
from .harness import run_eval, run_noise_sweep, run_static_baseline, run_train
from .mobility import ScenarioKind, scenario_for


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file (defaults to a preset)")
    sub.add_argument(
        "--scenario",
        choices=[k.value for k in ScenarioKind],
        help="mobility scenario preset / override",
    )
    sub.add_argument(
        "--profile", choices=["desk", "full"], default="desk",
        help="training length preset when no config file is given",
    )
    sub.add_argument("--seed", type=int, help="override the configured seed list")
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--episodes", type=int, help="override the episode count")
    sub.add_argument("--overwrite", action="store_true", help="allow reusing --out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavbs",
        description="Train and evaluate measurement-driven UAV base-station flight policies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train PPO policies")
    _add_common(p_train)
    p_train.add_argument("--log-every", type=int, default=100, help="progress print period")

    p_eval = sub.add_parser("eval", help="evaluate a trained checkpoint")
    _add_common(p_eval)
    p_eval.add_argument("--checkpoint", required=True, help="checkpoint file to evaluate")
    p_eval.add_argument(
        "--deterministic",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="use the policy mean instead of sampling",
    )
    p_eval.add_argument("--trace", action="store_true", help="write per-step trace CSVs")

    p_base = sub.add_parser("baseline", help="evaluate the static center-hover baseline")
    _add_common(p_base)
    p_base.add_argument("--trace", action="store_true", help="write per-step trace CSVs")

    p_sweep = sub.add_parser("sweep", help="AoA noise robustness sweep")
    _add_common(p_sweep)
    p_sweep.add_argument(
        "--checkpoint", help="evaluate this checkpoint at every noise level instead of retraining"
    )
    p_sweep.add_argument("--log-every", type=int, default=0, help="progress print period")
    return parser


def _load_cfg(args):
    if args.config:
        cfg = load_config(args.config)
        if args.scenario:
            cfg.env.scenario = scenario_for(args.scenario)
            cfg.run_id = f"{args.scenario}_custom"
    else:
        cfg = default_config(args.scenario or ScenarioKind.NO_MOVE, profile=args.profile)
    if args.seed is not None:
        cfg.seeds = [args.seed]
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_cfg(args)
        if args.command == "train":
            if args.episodes is not None:
                cfg.ppo.episodes_total = args.episodes
                cfg.validate()
            results = run_train(
                cfg, args.out, overwrite=args.overwrite, log_every=args.log_every
            )
            for res in results:
                print(
                    f"seed {res['seed']}: {res['episodes']} episodes, "
                    f"final throughput {res['final'].get('mean_throughput_bps', 0.0) / 1e6:.2f} Mbps, "
                    f"checkpoint {res['checkpoint']}"
                )
        elif args.command == "eval":
            res = run_eval(
                cfg,
                args.checkpoint,
                out_dir=args.out,
                seed=args.seed,
                episodes=args.episodes,
                deterministic=args.deterministic,
                trace=args.trace,
                overwrite=args.overwrite,
            )
            print(
                f"eval over {res.episodes} episodes: "
                f"{res.mean_throughput_bps / 1e6:.3f} Mbps mean per-UE throughput "
                f"(reward {res.mean_reward:.3f})"
            )
        elif args.command == "baseline":
            res = run_static_baseline(
                cfg,
                out_dir=args.out,
                seed=args.seed,
                episodes=args.episodes,
                trace=args.trace,
                overwrite=args.overwrite,
            )
            print(
                f"static baseline over {res.episodes} episodes: "
                f"{res.mean_throughput_bps / 1e6:.3f} Mbps mean per-UE throughput"
            )
        elif args.command == "sweep":
            table = run_noise_sweep(
                cfg,
                args.out,
                checkpoint_path=args.checkpoint,
                overwrite=args.overwrite,
                episodes_total=args.episodes,
                log_every=args.log_every,
            )
            for row in table:
                print(
                    f"noise std {row['noise_std_deg']:6.1f} deg -> "
                    f"{row['mean_throughput_bps'] / 1e6:.3f} Mbps "
                    f"(+- {row['std_throughput_bps'] / 1e6:.3f})"
                )
    except (ConfigError, FileExistsError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
