#!/usr/bin/env python3
"""Two-minute demo: train briefly on one target, evaluate, export audio.

    python scripts/quick_demo.py --target oo --episodes 600 --out runs/demo
"""

import argparse
import dataclasses
import logging
from pathlib import Path

from artic.backend import ReferenceBackend
from artic.env import EpisodeConfig
from artic.harness import run_eval
from artic.ppo import TrainConfig, train
from artic.targets import EXPERT_TARGET_NAMES, expert_target


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--target", default="oo", choices=EXPERT_TARGET_NAMES)
    parser.add_argument("--episodes", type=int, default=600)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", default="runs/demo")
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    out_dir = Path(args.out)
    backend = ReferenceBackend()
    target = expert_target(args.target, backend)
    episode_config = EpisodeConfig(target=target, horizon=50, target_id=args.target)
    cfg = dataclasses.replace(TrainConfig(), total_episodes=args.episodes, seed=args.seed)

    result = train(cfg, episode_config, backend,
                   stats_path=out_dir / "stats.csv", checkpoint_dir=out_dir)
    best = max(s.best_similarity for s in result.stats)
    print(f"trained {args.target} for {result.episode} episodes; "
          f"episode-best similarity {best:.3f}")

    report = run_eval(result.final_checkpoint, out_dir / "eval")
    print(f"greedy evaluation: total_reward={report.total_reward:.2f} "
          f"best_similarity={report.best_similarity:.3f}")
    print(f"audio: {report.wav_path}")
    print(f"trajectory: {report.trajectory_csv_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
