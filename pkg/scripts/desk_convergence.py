#!/usr/bin/env python3
"""Desk-scale convergence experiment over the shipped synthetic targets.

Trains one policy per target with the default recipe, stopping once the
episode-best similarity holds at 0.85 (never before 5,000 episodes, so the
moving-average trend stays measurable), and prints a per-target summary.

    python scripts/desk_convergence.py --out runs/desk --seed 0
"""

import argparse
import logging

from artic.experiments import run_desk_experiment
from artic.targets import EXPERT_TARGET_NAMES


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--targets", nargs="*", default=list(EXPERT_TARGET_NAMES),
                        choices=EXPERT_TARGET_NAMES)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-episodes", type=int, default=20_000)
    parser.add_argument("--min-episodes", type=int, default=5_000)
    parser.add_argument("--out", default="runs/desk", help="stats CSV directory")
    parser.add_argument("--sequential", action="store_true",
                        help="one target at a time (default: one process per target)")
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    results = run_desk_experiment(
        targets=tuple(args.targets),
        seed=args.seed,
        max_episodes=args.max_episodes,
        min_episodes=args.min_episodes,
        out_dir=args.out,
        parallel=not args.sequential,
    )

    print(f"\n{'target':<8}{'episodes':>10}{'reached@':>10}{'ma@500':>10}{'ma@5000':>10}{'minutes':>9}")
    converged = 0
    for r in results:
        ma5000 = f"{r.ma_reward_at_5000:.2f}" if r.ma_reward_at_5000 is not None else "n/a"
        reached = str(r.reached_at) if r.reached_at else "never"
        print(f"{r.target_name:<8}{r.episodes_run:>10}{reached:>10}"
              f"{r.ma_reward_at_500:>10.2f}{ma5000:>10}{r.elapsed_s / 60:>9.1f}")
        if r.reached_threshold and r.trend_is_upward:
            converged += 1
    print(f"\n{converged}/{len(results)} targets reached episode-best similarity >= 0.85 "
          "with an upward reward trend")
    return 0 if converged >= 2 else 1


if __name__ == "__main__":
    raise SystemExit(main())
