"""Desk-scale convergence experiment: train against the shipped targets.

One run per target with the default training recipe and the scheduled
exploration decay; the run stops early once the episode-best similarity holds
at or above the threshold for a few consecutive updates (never before
``min_episodes``, so the moving-average trend at episode 5,000 stays
measurable), and gives up at ``max_episodes``.
"""

from __future__ import annotations

import dataclasses
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .backend import ReferenceBackend
from .env import EpisodeConfig
from .harness import ma_at_episode
from .ppo import TrainConfig, UpdateStats, train
from .targets import EXPERT_TARGET_NAMES, expert_target

log = logging.getLogger("artic.experiments")

SIMILARITY_THRESHOLD = 0.85
MA_WINDOW_EPISODES = 500


@dataclass
class DeskRunResult:
    target_name: str
    episodes_run: int
    reached_at: int | None        # first episode whose update hit the threshold
    ma_reward_at_500: float
    ma_reward_at_5000: float | None
    elapsed_s: float
    stats: list[UpdateStats]

    @property
    def reached_threshold(self) -> bool:
        return self.reached_at is not None

    @property
    def trend_is_upward(self) -> bool:
        return self.ma_reward_at_5000 is not None and self.ma_reward_at_5000 > self.ma_reward_at_500


def desk_run(
    target_name: str,
    seed: int = 0,
    max_episodes: int = 20_000,
    min_episodes: int = 5_000,
    threshold: float = SIMILARITY_THRESHOLD,
    stats_path=None,
) -> DeskRunResult:
    """Train one policy on one shipped target with the default recipe."""
    backend = ReferenceBackend()
    target = expert_target(target_name, backend)
    episode_config = EpisodeConfig(target=target, horizon=50, target_id=target_name)
    cfg = dataclasses.replace(
        TrainConfig(),
        seed=seed,
        total_episodes=max_episodes,
        stop_similarity=threshold,
        stop_consecutive=3,
        stop_min_episodes=min_episodes,
    )

    start = time.perf_counter()
    result = train(cfg, episode_config, backend, stats_path=stats_path)
    elapsed = time.perf_counter() - start

    reached_at = next(
        (s.episode for s in result.stats if s.best_similarity >= threshold), None
    )
    ma_500 = ma_at_episode(result.stats, 500, MA_WINDOW_EPISODES)
    ma_5000 = (
        ma_at_episode(result.stats, 5000, MA_WINDOW_EPISODES)
        if result.episode >= 5000
        else None
    )
    return DeskRunResult(
        target_name=target_name,
        episodes_run=result.episode,
        reached_at=reached_at,
        ma_reward_at_500=ma_500,
        ma_reward_at_5000=ma_5000,
        elapsed_s=elapsed,
        stats=result.stats,
    )


def _desk_run_args(args) -> DeskRunResult:
    return desk_run(*args)


def run_desk_experiment(
    targets=EXPERT_TARGET_NAMES,
    seed: int = 0,
    max_episodes: int = 20_000,
    min_episodes: int = 5_000,
    out_dir=None,
    parallel: bool = True,
) -> list[DeskRunResult]:
    """Run the convergence experiment across targets, one process per target."""
    jobs = []
    for name in targets:
        stats_path = None
        if out_dir is not None:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            stats_path = str(Path(out_dir) / f"stats_{name}.csv")
        jobs.append((name, seed, max_episodes, min_episodes, SIMILARITY_THRESHOLD, stats_path))

    if parallel and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
            results = list(pool.map(_desk_run_args, jobs))
    else:
        results = [_desk_run_args(job) for job in jobs]

    for r in results:
        log.info(
            "%s: episodes=%d reached_at=%s ma@500=%.2f ma@5000=%s elapsed=%.0fs",
            r.target_name, r.episodes_run, r.reached_at, r.ma_reward_at_500,
            f"{r.ma_reward_at_5000:.2f}" if r.ma_reward_at_5000 is not None else "n/a",
            r.elapsed_s,
        )
    return results
