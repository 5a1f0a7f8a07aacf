"""Bounded articulatory control environment.

Actions are per-step velocity commands for the 12 articulator coordinates
plus loudness, each clamped to [-0.5, 0.5]. State integrates with a unit-gain
Euler update and stays inside [-3, 3] on every coordinate. Observations stack
the last 15 frames (zero-padded after reset); reward comes from a pluggable
acoustic backend that scores the trajectory decoded so far against a target
syllable embedding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .errors import ActionError, BackendError, ConfigError, EpisodeFinished
from .frames import (
    FRAME_DIM,
    POSITION_BOUND,
    STACK_FRAMES,
    VELOCITY_BOUND,
    Trajectory,
)

if TYPE_CHECKING:  # pragma: no cover
    from .backend import AcousticBackend, SyllableEmbedding


@dataclass(frozen=True)
class RewardSignal:
    """Outcome of scoring one partial trajectory.

    ``similarity`` is only meaningful when ``detected`` is true. ``scored``
    is false for the placeholder signals emitted on intermediate steps in
    terminal-only reward mode; every scored signal satisfies
    detected=False => value=-1 and detected=True => value=similarity.
    """

    value: float
    detected: bool
    similarity: float = 0.0
    scored: bool = True

    @classmethod
    def miss(cls) -> "RewardSignal":
        return cls(value=-1.0, detected=False)

    @classmethod
    def not_scored(cls) -> "RewardSignal":
        return cls(value=0.0, detected=False, scored=False)


REWARD_MODES = ("per_step", "terminal_only")


@dataclass(frozen=True)
class EpisodeConfig:
    """Everything one episode needs: horizon, timing, target, reward cadence."""

    target: "SyllableEmbedding"
    horizon: int = 50
    step_duration: float = 0.02
    reward_mode: str = "per_step"
    target_id: str = field(default="")

    def validate(self) -> None:
        if not isinstance(self.horizon, (int, np.integer)) or self.horizon < 1:
            raise ConfigError(f"horizon must be a positive integer, got {self.horizon!r}")
        if not np.isfinite(self.step_duration) or self.step_duration <= 0:
            raise ConfigError(f"step_duration must be > 0, got {self.step_duration!r}")
        if self.reward_mode not in REWARD_MODES:
            raise ConfigError(f"reward_mode must be one of {REWARD_MODES}, got {self.reward_mode!r}")
        values = np.asarray(self.target.values, dtype=float)
        if values.size == 0 or not np.all(np.isfinite(values)):
            raise ConfigError("target embedding must be non-empty and finite")

    @property
    def episode_seconds(self) -> float:
        return self.horizon * self.step_duration


def clamp_action(raw) -> np.ndarray:
    """Clamp a raw 13-vector to the velocity box, preserving order."""
    action = np.asarray(raw, dtype=float)
    if action.shape != (FRAME_DIM,):
        raise ActionError(f"action must have shape ({FRAME_DIM},), got {action.shape}")
    if not np.all(np.isfinite(action)):
        raise ActionError("action components must be finite")
    return np.clip(action, -VELOCITY_BOUND, VELOCITY_BOUND)


def integrate(frame: np.ndarray, action: np.ndarray) -> np.ndarray:
    """One Euler step: position plus velocity, clamped to the state box."""
    return np.clip(frame + action, -POSITION_BOUND, POSITION_BOUND)


class ArticulatoryEnv:
    """Fixed-horizon episode driver around the integrator dynamics.

    One instance serves one rollout at a time; run independent instances for
    parallel rollouts, each with its own backend session.
    """

    def __init__(self):
        self._config: EpisodeConfig | None = None
        self._stack = np.zeros((STACK_FRAMES, FRAME_DIM))
        self._trajectory: Trajectory | None = None
        self._steps = 0
        self._done = False

    clamp_action = staticmethod(clamp_action)
    integrate = staticmethod(integrate)

    @property
    def config(self) -> EpisodeConfig:
        if self._config is None:
            raise ConfigError("environment has not been reset")
        return self._config

    @property
    def step_count(self) -> int:
        return self._steps

    @property
    def done(self) -> bool:
        return self._done

    @property
    def trajectory(self) -> Trajectory:
        if self._trajectory is None:
            raise ConfigError("environment has not been reset")
        return self._trajectory

    @property
    def current_frame(self) -> np.ndarray:
        return self._stack[-1].copy()

    def observation(self) -> np.ndarray:
        """(15, 13) copy of the frame stack, oldest first."""
        return self._stack.copy()

    def reset(self, config: EpisodeConfig) -> np.ndarray:
        """Start a fresh episode: zero state, zero-filled stack, empty trajectory."""
        config.validate()
        self._config = config
        self._stack[:] = 0.0
        self._trajectory = Trajectory(config.horizon, config.target_id)
        self._steps = 0
        self._done = False
        return self.observation()

    def step(self, action_raw, backend: "AcousticBackend") -> tuple[np.ndarray, RewardSignal, bool]:
        """Apply one clamped action, then score the trajectory so far."""
        config = self.config
        if self._done:
            raise EpisodeFinished(f"episode already finished after {self._steps} steps")

        action = clamp_action(action_raw)
        new_frame = integrate(self._stack[-1], action)
        self._trajectory.append(new_frame)
        self._stack[:-1] = self._stack[1:]
        self._stack[-1] = new_frame
        self._steps += 1
        self._done = self._steps >= config.horizon

        if config.reward_mode == "per_step" or self._done:
            try:
                signal = backend.score(self._trajectory, config.target, config.step_duration)
            except Exception as exc:
                raise BackendError(f"backend failed at step {self._steps}: {exc}") from exc
        else:
            signal = RewardSignal.not_scored()

        return self.observation(), signal, self._done
