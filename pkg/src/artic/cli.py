"""Command-line harness: train, eval, rollout, export-audio, make-target, plot-data.

Exit codes: 0 success, 1 runtime/config failure (message on stderr), 2 usage
errors (unknown flags or subcommands). Log verbosity comes from ARTIC_LOG
(error, info, or debug).
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import harness, wavio
from .backend import ReferenceBackend, SyllableEmbedding
from .checkpoint import load_checkpoint
from .env import ArticulatoryEnv
from .errors import ArticError, ConfigError
from .policy import sample_action
from .ppo import train
from .runconfig import build_backend, episode_config_from, load_run_config, resolve_target
from .targets import EXPERT_TARGET_NAMES, expert_trajectory

log = logging.getLogger("artic")

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging() -> None:
    level_name = os.environ.get("ARTIC_LOG", "info").lower()
    if level_name not in _LOG_LEVELS:
        raise ConfigError(f"ARTIC_LOG must be one of {sorted(_LOG_LEVELS)}, got {level_name!r}")
    logging.basicConfig(level=_LOG_LEVELS[level_name], format="%(levelname)s %(name)s: %(message)s")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="artic", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run PPO training from a run config")
    p_train.add_argument("--config", required=True, help="run config file (key=value sections)")
    p_train.add_argument("--seed", type=int, default=None, help="override [run] seed")
    p_train.add_argument("--out", default=None, help="override [run] out_dir")
    p_train.add_argument("--resume", default=None, help="checkpoint to resume from")

    p_eval = sub.add_parser("eval", help="deterministic mean-action evaluation of a checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--config", default=None, help="optional run config (backend overrides)")
    p_eval.add_argument("--out", default="eval_out")

    p_roll = sub.add_parser("rollout", help="sampled episodes from a checkpoint")
    p_roll.add_argument("--checkpoint", required=True)
    p_roll.add_argument("--episodes", type=int, default=5)
    p_roll.add_argument("--seed", type=int, default=0)

    p_audio = sub.add_parser("export-audio", help="synthesize a trajectory CSV to WAV")
    p_audio.add_argument("--trajectory", required=True, help="trajectory CSV path")
    p_audio.add_argument("--out", required=True, help="output WAV path")
    p_audio.add_argument("--step-duration", type=float, default=0.02)
    p_audio.add_argument("--sample-rate", type=int, default=16000)

    p_target = sub.add_parser("make-target", help="compute and save a target embedding")
    source = p_target.add_mutually_exclusive_group(required=True)
    source.add_argument("--fixture", choices=EXPERT_TARGET_NAMES)
    source.add_argument("--wav")
    p_target.add_argument("--out", required=True, help="output .npz path")
    p_target.add_argument("--step-duration", type=float, default=0.02)

    p_plot = sub.add_parser("plot-data", help="emit smoothed reward/similarity CSV")
    p_plot.add_argument("--stats", required=True, help="stats CSV from training")
    p_plot.add_argument("--window", type=int, default=500, help="window in episodes")
    p_plot.add_argument("--out", default=None, help="output CSV (default: <stats>_smoothed.csv)")

    return parser


def _cmd_train(args) -> int:
    cfg = load_run_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.train = dataclasses.replace(cfg.train, seed=args.seed)
    if args.out is not None:
        cfg.out_dir = Path(args.out)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)

    backend = build_backend(cfg)
    target, target_id = resolve_target(cfg, backend)
    episode_config = episode_config_from(cfg, target, target_id)
    log.info("training target %r for up to %d episodes", target_id, cfg.train.total_episodes)

    result = train(
        cfg.train,
        episode_config,
        backend,
        stats_path=cfg.out_dir / "stats.csv",
        checkpoint_dir=cfg.out_dir,
        resume_from=args.resume,
    )
    log.info(
        "finished after %d episodes (%d updates); final checkpoint: %s",
        result.episode, result.updates, result.final_checkpoint,
    )
    print(f"trained {target_id}: episodes={result.episode} "
          f"best_similarity={max(s.best_similarity for s in result.stats):.4f} "
          f"checkpoint={result.final_checkpoint}")
    return 0


def _cmd_eval(args) -> int:
    backend = None
    if args.config is not None:
        cfg = load_run_config(args.config)
        backend = build_backend(cfg)
    report = harness.run_eval(args.checkpoint, args.out, backend=backend)
    print(f"syllable={report.syllable_id} total_reward={report.total_reward:.4f} "
          f"best_similarity={report.best_similarity:.4f} wav={report.wav_path} "
          f"trajectory={report.trajectory_csv_path}")
    return 0


def _cmd_rollout(args) -> int:
    state = load_checkpoint(args.checkpoint)
    backend = ReferenceBackend()
    env = ArticulatoryEnv()
    rng = np.random.default_rng(args.seed)
    for index in range(args.episodes):
        obs = env.reset(state.episode_config).reshape(-1)
        total = 0.0
        best = -1.0
        done = False
        while not done:
            sample = sample_action(state.params, obs, rng)
            next_obs, signal, done = env.step(sample.action_raw, backend)
            total += signal.value
            if signal.detected:
                best = max(best, signal.similarity)
            obs = next_obs.reshape(-1)
        print(f"episode {index + 1}: total_reward={total:.4f} best_similarity={best:.4f}")
    return 0


def _cmd_export_audio(args) -> int:
    trajectory = harness.load_trajectory_csv(args.trajectory)
    backend = ReferenceBackend(sample_rate=args.sample_rate)
    waveform = backend.synthesize(trajectory, args.step_duration)
    wavio.write_wav(args.out, waveform.samples, waveform.sample_rate)
    print(f"wrote {args.out} ({waveform.samples.size} samples at {waveform.sample_rate} Hz)")
    return 0


def _cmd_make_target(args) -> int:
    backend = ReferenceBackend()
    if args.fixture:
        embedding = backend.make_target(expert_trajectory(args.fixture), args.step_duration)
        name = args.fixture
    else:
        embedding = backend.make_target(args.wav, args.step_duration)
        name = Path(args.wav).stem
    np.savez(args.out, values=np.asarray(embedding.values), name=np.array(name))
    print(f"wrote target {name!r} (dim {embedding.dim}) to {args.out}")
    return 0


def load_target_npz(path) -> tuple[SyllableEmbedding, str]:
    with np.load(path, allow_pickle=False) as blob:
        return SyllableEmbedding(blob["values"].copy()), str(blob["name"][()])


def _cmd_plot_data(args) -> int:
    out = args.out or str(Path(args.stats).with_suffix("")) + "_smoothed.csv"
    harness.write_plot_data(args.stats, out, args.window)
    print(f"wrote {out}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "rollout": _cmd_rollout,
    "export-audio": _cmd_export_audio,
    "make-target": _cmd_make_target,
    "plot-data": _cmd_plot_data,
}


def main(argv=None) -> int:
    try:
        _setup_logging()
        args = _build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except ArticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
