"""Evaluation, trajectory/statistics export, and plot-data smoothing."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import wavio
from .backend import AcousticBackend, ReferenceBackend
from .checkpoint import load_checkpoint
from .env import ArticulatoryEnv, EpisodeConfig
from .errors import CompatibilityError, EmptyInputError, ShapeError
from .frames import FRAME_DIM, FRAME_LABELS, Trajectory
from .policy import actor_forward
from .ppo import UpdateStats

TRAJECTORY_CSV_HEADER = "step," + ",".join(FRAME_LABELS)


def export_trajectory_csv(trajectory: Trajectory, path) -> Path:
    """Write one row per step at full float precision (parse-back exact)."""
    frames = trajectory.frames
    if frames.shape[0] == 0:
        raise EmptyInputError("cannot export an empty trajectory")
    path = Path(path)
    with open(path, "w") as handle:
        handle.write(TRAJECTORY_CSV_HEADER + "\n")
        for step, frame in enumerate(frames, start=1):
            handle.write(str(step) + "," + ",".join(repr(float(v)) for v in frame) + "\n")
    return path


def load_trajectory_csv(path, target_id: str = "") -> Trajectory:
    """Parse a trajectory CSV written by export_trajectory_csv."""
    path = Path(path)
    lines = path.read_text().strip().splitlines()
    if not lines or lines[0] != TRAJECTORY_CSV_HEADER:
        raise ShapeError(f"{path}: unexpected trajectory CSV header")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != FRAME_DIM + 1:
            raise ShapeError(f"{path}: expected {FRAME_DIM + 1} columns, got {len(parts)}")
        rows.append([float(v) for v in parts[1:]])
    return Trajectory.from_frames(np.array(rows), target_id=target_id)


def read_stats_csv(path) -> list[UpdateStats]:
    path = Path(path)
    lines = path.read_text().strip().splitlines()
    if not lines or lines[0] != UpdateStats.CSV_HEADER:
        raise ShapeError(f"{path}: unexpected stats CSV header")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        rows.append(
            UpdateStats(
                episode=int(parts[0]),
                mean_reward=float(parts[1]),
                best_similarity=float(parts[2]),
                surrogate_loss=float(parts[3]),
                value_loss=float(parts[4]),
                clip_fraction=float(parts[5]),
                std=float(parts[6]),
            )
        )
    return rows


def moving_average(stats: list[UpdateStats], window_episodes: int) -> list[dict]:
    """Trailing moving averages of reward and best similarity.

    Each stats row summarizes a fixed-size batch of episodes, so the average
    over rows whose episode counter falls inside the trailing window equals
    the per-episode moving average.
    """
    out = []
    for i, row in enumerate(stats):
        lo = row.episode - window_episodes
        rows = [s for s in stats[: i + 1] if s.episode > lo]
        out.append(
            {
                "episode": row.episode,
                "reward_ma": float(np.mean([s.mean_reward for s in rows])),
                "best_similarity_ma": float(np.mean([s.best_similarity for s in rows])),
            }
        )
    return out


def ma_at_episode(stats: list[UpdateStats], episode: int, window_episodes: int) -> float:
    """Moving-average reward over the window ending at the given episode."""
    rows = [s for s in stats if episode - window_episodes < s.episode <= episode]
    if not rows:
        raise ShapeError(f"no stats rows in window ({episode - window_episodes}, {episode}]")
    return float(np.mean([s.mean_reward for s in rows]))


def write_plot_data(stats_path, out_path, window_episodes: int) -> Path:
    stats = read_stats_csv(stats_path)
    smoothed = moving_average(stats, window_episodes)
    out_path = Path(out_path)
    with open(out_path, "w") as handle:
        handle.write("episode,reward_ma,best_similarity_ma\n")
        for row in smoothed:
            handle.write(
                f"{row['episode']},{repr(row['reward_ma'])},{repr(row['best_similarity_ma'])}\n"
            )
    return out_path


@dataclass
class EvalReport:
    """Summary of one deterministic evaluation episode."""

    syllable_id: str
    total_reward: float
    best_similarity: float
    wav_path: str
    trajectory_csv_path: str
    transcription: str = ""  # free text, filled in by a human listener

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def greedy_episode(params, episode_config: EpisodeConfig, backend: AcousticBackend):
    """Run one episode with mean actions (no sampling); returns details."""
    env = ArticulatoryEnv()
    obs = env.reset(episode_config).reshape(-1)
    total_reward = 0.0
    best_similarity = -1.0
    done = False
    while not done:
        action = actor_forward(params, obs)
        next_obs, signal, done = env.step(action, backend)
        total_reward += signal.value
        if signal.detected:
            best_similarity = max(best_similarity, signal.similarity)
        obs = next_obs.reshape(-1)
    return env.trajectory, total_reward, best_similarity


def run_eval(
    checkpoint_path,
    out_dir,
    backend: AcousticBackend | None = None,
    episode_config: EpisodeConfig | None = None,
) -> EvalReport:
    """Evaluate a checkpoint: greedy episode, WAV + trajectory CSV + report.

    The checkpoint's stored target and episode settings are used unless an
    explicit episode_config overrides them.
    """
    state = load_checkpoint(checkpoint_path)
    config = episode_config or state.episode_config
    backend = backend or ReferenceBackend()
    if config.target.dim != backend.descriptor.embedding_dim:
        raise CompatibilityError(
            f"checkpoint target dim {config.target.dim} != backend embedding dim "
            f"{backend.descriptor.embedding_dim}"
        )

    trajectory, total_reward, best_similarity = greedy_episode(state.params, config, backend)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tag = config.target_id or "eval"
    wav_path = out_dir / f"{tag}.wav"
    csv_path = out_dir / f"{tag}_trajectory.csv"

    if isinstance(backend, ReferenceBackend):
        waveform = backend.synthesize(trajectory, config.step_duration)
        wavio.write_wav(wav_path, waveform.samples, waveform.sample_rate)
    else:
        samples, rate = backend.synthesize_samples(trajectory, config.step_duration)
        wavio.write_wav(wav_path, samples, rate)
    export_trajectory_csv(trajectory, csv_path)

    report = EvalReport(
        syllable_id=tag,
        total_reward=total_reward,
        best_similarity=best_similarity,
        wav_path=str(wav_path),
        trajectory_csv_path=str(csv_path),
    )
    (out_dir / f"{tag}_report.json").write_text(report.to_json() + "\n")
    return report
