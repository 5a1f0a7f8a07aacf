"""Syllable-level speech learning via PPO control of vocal-tract articulators.

A Gaussian MLP policy commands six articulators plus loudness inside a
bounded integrator environment; a decode-and-perceive backend turns each
partial trajectory into audio, detects syllables, and rewards the policy with
the cosine similarity between the last detected syllable's embedding and a
target embedding (or -1 when nothing is detected).
"""

from .backend import (
    AcousticBackend,
    BackendDescriptor,
    ReferenceBackend,
    SyllableEmbedding,
    SyllableSegment,
    Waveform,
)
from .env import ArticulatoryEnv, EpisodeConfig, RewardSignal, clamp_action, integrate
from .frames import Articulator, FRAME_DIM, FRAME_LABELS, OBS_DIM, STACK_FRAMES, Trajectory
from .policy import ArchConfig, GaussianSample, PolicyParams, init_policy, sample_action
from .ppo import TrainConfig, TrainResult, UpdateStats, compute_gae, ppo_loss, std_schedule, train
from .targets import EXPERT_TARGET_NAMES, expert_target, expert_trajectory

__version__ = "0.1.0"

__all__ = [
    "AcousticBackend",
    "ArchConfig",
    "Articulator",
    "ArticulatoryEnv",
    "BackendDescriptor",
    "EXPERT_TARGET_NAMES",
    "EpisodeConfig",
    "FRAME_DIM",
    "FRAME_LABELS",
    "GaussianSample",
    "OBS_DIM",
    "PolicyParams",
    "ReferenceBackend",
    "RewardSignal",
    "STACK_FRAMES",
    "SyllableEmbedding",
    "SyllableSegment",
    "TrainConfig",
    "TrainResult",
    "Trajectory",
    "UpdateStats",
    "Waveform",
    "clamp_action",
    "compute_gae",
    "expert_target",
    "expert_trajectory",
    "init_policy",
    "integrate",
    "ppo_loss",
    "sample_action",
    "std_schedule",
    "train",
    "__version__",
]
