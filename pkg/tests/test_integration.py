"""Cross-module flows: bridge-backed training and reward accounting."""

import sys

import numpy as np
import pytest

from artic import harness
from artic.backend import ReferenceBackend
from artic.env import EpisodeConfig
from artic.frames import Trajectory
from artic.ppo import TrainConfig, train
from artic.runconfig import build_backend, episode_config_from, load_run_config, resolve_target
from artic.targets import expert_target

BRIDGE_CONFIG = """
[run]
seed = 3
out_dir = {out_dir}

[episode]
horizon = 5

[train]
total_episodes = 20
episodes_per_update = 10
epochs_per_update = 2
minibatch_size = 16
hidden = 16, 16

[backend]
kind = bridge
endpoint = {python} -m artic.loopback

[target]
fixture = oo
"""


def test_training_through_the_bridge_matches_reference(tmp_path):
    # the same tiny run, once in-process and once over the wire, must produce
    # identical stats rows (the loopback server wraps the same backend)
    path = tmp_path / "bridge.cfg"
    path.write_text(BRIDGE_CONFIG.format(out_dir=tmp_path / "out", python=sys.executable))
    cfg = load_run_config(path)

    bridge_backend = build_backend(cfg)
    try:
        target, target_id = resolve_target(cfg, bridge_backend)
        episode_config = episode_config_from(cfg, target, target_id)
        bridge_rows = train(cfg.train, episode_config, bridge_backend).stats
    finally:
        bridge_backend.close()

    reference_backend = ReferenceBackend()
    ref_target = expert_target("oo", reference_backend, horizon=5)
    assert np.max(np.abs(ref_target.values - target.values)) <= 1e-12
    reference_rows = train(
        cfg.train,
        EpisodeConfig(target=ref_target, horizon=5, target_id="oo"),
        reference_backend,
    ).stats

    assert [r.csv_row() for r in bridge_rows] == [r.csv_row() for r in reference_rows]


def test_eval_reward_accounting_is_internally_consistent(tmp_path):
    # EvalReport.total_reward must equal the sum of per-step rewards obtained
    # by independently re-scoring every prefix of the exported trajectory
    cfg = TrainConfig(
        total_episodes=60, episodes_per_update=10, epochs_per_update=2,
        minibatch_size=32, hidden=(16, 16), seed=11,
    )
    episode_config = EpisodeConfig(target=expert_target("oo"), horizon=10, target_id="oo")
    result = train(cfg, episode_config, ReferenceBackend(), checkpoint_dir=tmp_path / "ck")
    report = harness.run_eval(result.final_checkpoint, tmp_path / "eval")

    exported = harness.load_trajectory_csv(tmp_path / "eval" / "oo_trajectory.csv")
    frames = np.asarray(exported.frames)
    fresh = ReferenceBackend()
    total = 0.0
    for n in range(1, frames.shape[0] + 1):
        prefix = Trajectory.from_frames(frames[:n])
        total += fresh.score(prefix, episode_config.target).value
    assert total == pytest.approx(report.total_reward, abs=1e-9)
