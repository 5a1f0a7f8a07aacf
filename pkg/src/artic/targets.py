"""Scripted expert trajectories used as built-in training targets.

Each fixture ramps loudness up from silence and drives a few articulators to
a distinct vowel-like posture, using per-step moves that respect the velocity
and position bounds, so every fixture is exactly reproducible by a policy.
The fixture's own last-syllable embedding is the training target, which makes
a similarity of 1.0 attainable in principle.
"""

from __future__ import annotations

import numpy as np

from .backend import ReferenceBackend, SyllableEmbedding
from .env import clamp_action, integrate
from .errors import ConfigError
from .frames import FRAME_DIM, Trajectory

# posture values by flat frame index: TD_x=0, TD_y=1, TT_y=5, loudness=12
_POSTURES = {
    # open /a/-like: F1 950 Hz, F2 1200 Hz, F3 2425 Hz
    "ah": {0: 0.75, 1: -2.25, 5: 0.5, 12: 2.0},
    # high-front /i/-like: F1 280 Hz, F2 2400 Hz, F3 2800 Hz
    "ee": {0: -2.25, 1: 1.1, 5: -2.0, 12: 2.0},
    # high-back /u/-like: F1 300 Hz, F2 700 Hz, F3 2200 Hz
    "oo": {0: 2.0, 1: 1.0, 5: 2.0, 12: 2.0},
}

EXPERT_TARGET_NAMES = tuple(sorted(_POSTURES))


def expert_trajectory(name: str, horizon: int = 50) -> Trajectory:
    """Bounded greedy approach to the named posture, held until the horizon."""
    if name not in _POSTURES:
        raise ConfigError(f"unknown expert target {name!r}; choose from {EXPERT_TARGET_NAMES}")
    goal = np.zeros(FRAME_DIM)
    for index, value in _POSTURES[name].items():
        goal[index] = value

    trajectory = Trajectory(horizon, target_id=name)
    frame = np.zeros(FRAME_DIM)
    for _ in range(horizon):
        action = clamp_action(np.clip(goal - frame, -0.5, 0.5))
        frame = integrate(frame, action)
        trajectory.append(frame)
    return trajectory


def expert_target(
    name: str,
    backend: ReferenceBackend | None = None,
    step_duration: float = 0.02,
    horizon: int = 50,
) -> SyllableEmbedding:
    """Target embedding of the named fixture under the given backend."""
    backend = backend or ReferenceBackend()
    return backend.make_target(expert_trajectory(name, horizon), step_duration)
