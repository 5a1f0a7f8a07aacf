"""On-policy PPO trainer: rollouts, GAE, clipped surrogate updates.

Training is single-worker and fully deterministic for a fixed seed: one
numpy Generator drives action sampling and minibatch shuffling, and its state
is checkpointed so a resumed run reproduces the uninterrupted one exactly.
Exploration follows the scheduled per-dimension standard deviation (0.7,
decayed by 0.01 every 100 episodes down to a 0.05 floor); log_std gradients
are computed but overridden by the schedule after every optimizer step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import checkpoint as ckpt
from .backend import AcousticBackend
from .env import ArticulatoryEnv, EpisodeConfig
from .errors import BackendError, ConfigError, NumericError, ShapeError
from .frames import OBS_DIM
from .policy import (
    LOG_STD_MAX,
    LOG_STD_MIN,
    ArchConfig,
    LossComponents,
    LossSpec,
    MiniBatch,
    PolicyParams,
    actor_forward,
    critic_forward,
    gaussian_log_prob,
    init_policy,
    loss_and_gradients,
    sample_action,
)

log = logging.getLogger("artic.ppo")


@dataclass(frozen=True)
class TrainConfig:
    """All PPO hyperparameters; defaults are the shipped training recipe."""

    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    lr: float = 3e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs_per_update: int = 10
    minibatch_size: int = 128
    episodes_per_update: int = 10
    value_coef: float = 0.5
    entropy_coef: float = 0.0
    total_episodes: int = 25_000
    std_init: float = 0.7
    std_decay: float = 0.01
    std_interval: int = 100
    std_floor: float = 0.05
    seed: int = 0
    hidden: tuple[int, ...] = (256, 256)
    checkpoint_every_updates: int = 50
    # optional stopping rule: episode-best similarity >= stop_similarity for
    # stop_consecutive updates in a row (after stop_min_episodes).
    stop_similarity: float | None = None
    stop_consecutive: int = 3
    stop_min_episodes: int = 0

    def validate(self) -> None:
        if not (0.0 < self.gamma <= 1.0):
            raise ConfigError(f"gamma must be in (0, 1], got {self.gamma}")
        if not (0.0 <= self.gae_lambda <= 1.0):
            raise ConfigError(f"gae_lambda must be in [0, 1], got {self.gae_lambda}")
        if self.clip_eps <= 0.0:
            raise ConfigError(f"clip_eps must be > 0, got {self.clip_eps}")
        if self.std_floor > self.std_init:
            raise ConfigError("std_floor must not exceed std_init")
        for name in ("epochs_per_update", "minibatch_size", "episodes_per_update",
                     "total_episodes", "std_interval"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")

    def arch(self, obs_dim: int = OBS_DIM, act_dim: int = 13) -> ArchConfig:
        return ArchConfig(obs_dim=obs_dim, act_dim=act_dim, hidden=tuple(self.hidden))

    def loss_spec(self) -> LossSpec:
        return LossSpec(self.clip_eps, self.value_coef, self.entropy_coef)


def std_schedule(episode: int, cfg: TrainConfig) -> float:
    """Scheduled exploration std after the given number of completed episodes."""
    if episode < 0:
        raise ConfigError(f"episode must be >= 0, got {episode}")
    decayed = cfg.std_init - cfg.std_decay * (episode // cfg.std_interval)
    return max(cfg.std_floor, decayed)


def compute_gae(rewards, values, bootstrap_value: float, gamma: float, lam: float):
    """Generalized advantage estimation for one episode.

    delta_t = r_t + gamma * v_{t+1} - v_t (v_T is the bootstrap value) and
    A_t = sum_k (gamma * lam)^k * delta_{t+k}; returns are A + values.
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    if rewards.shape != values.shape or rewards.ndim != 1:
        raise ShapeError(f"rewards {rewards.shape} and values {values.shape} must match, 1-D")
    next_values = np.append(values[1:], bootstrap_value)
    deltas = rewards + gamma * next_values - values
    advantages = np.empty_like(deltas)
    acc = 0.0
    for t in range(deltas.size - 1, -1, -1):
        acc = deltas[t] + gamma * lam * acc
        advantages[t] = acc
    return advantages, advantages + values


def ppo_loss(
    batch: MiniBatch,
    params: PolicyParams,
    clip_eps: float = 0.2,
    value_coef: float = 0.5,
    entropy_coef: float = 0.0,
) -> LossComponents:
    """Forward-only PPO loss; an independent path from the gradient code."""
    mean = actor_forward(params, batch.obs)
    log_prob = gaussian_log_prob(batch.actions, mean, params.log_std)
    ratio = np.exp(log_prob - batch.log_prob_old)
    if not np.all(np.isfinite(ratio)):
        raise NumericError("non-finite probability ratio")
    surrogate_terms = np.minimum(
        ratio * batch.advantages,
        np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * batch.advantages,
    )
    surrogate = -float(np.mean(surrogate_terms))
    clip_fraction = float(np.mean(np.abs(ratio - 1.0) > clip_eps))
    values = critic_forward(params, batch.obs)
    value_loss = float(np.mean((values - batch.returns) ** 2))
    entropy = float(
        np.sum(params.log_std) + params.arch.act_dim * (0.5 + 0.5 * math.log(2 * math.pi))
    )
    total = surrogate + value_coef * value_loss - entropy_coef * entropy
    return LossComponents(total, surrogate, value_loss, entropy, clip_fraction)


class RolloutBuffer:
    """Per-step records for one update, plus advantages and returns.

    Advantages are normalized over the whole update (zero mean, unit
    variance, 1e-8 guard); the raw values stay available for audit.
    """

    def __init__(self):
        self._episodes: list[dict] = []
        self.obs: np.ndarray | None = None
        self.actions: np.ndarray | None = None
        self.log_probs: np.ndarray | None = None
        self.rewards: np.ndarray | None = None
        self.values: np.ndarray | None = None
        self.dones: np.ndarray | None = None
        self.raw_advantages: np.ndarray | None = None
        self.advantages: np.ndarray | None = None
        self.returns: np.ndarray | None = None

    def add_episode(self, obs, actions, log_probs, rewards, values) -> None:
        self._episodes.append(
            dict(
                obs=np.asarray(obs, dtype=float),
                actions=np.asarray(actions, dtype=float),
                log_probs=np.asarray(log_probs, dtype=float),
                rewards=np.asarray(rewards, dtype=float),
                values=np.asarray(values, dtype=float),
            )
        )

    @property
    def n_steps(self) -> int:
        return sum(ep["rewards"].size for ep in self._episodes)

    def finalize(self, gamma: float, lam: float) -> None:
        if not self._episodes:
            raise ShapeError("no episodes collected")
        adv_parts, ret_parts, done_parts = [], [], []
        for ep in self._episodes:
            adv, ret = compute_gae(ep["rewards"], ep["values"], 0.0, gamma, lam)
            adv_parts.append(adv)
            ret_parts.append(ret)
            done = np.zeros(ep["rewards"].size, dtype=bool)
            done[-1] = True
            done_parts.append(done)
        self.obs = np.concatenate([ep["obs"] for ep in self._episodes])
        self.actions = np.concatenate([ep["actions"] for ep in self._episodes])
        self.log_probs = np.concatenate([ep["log_probs"] for ep in self._episodes])
        self.rewards = np.concatenate([ep["rewards"] for ep in self._episodes])
        self.values = np.concatenate([ep["values"] for ep in self._episodes])
        self.dones = np.concatenate(done_parts)
        self.raw_advantages = np.concatenate(adv_parts)
        self.returns = np.concatenate(ret_parts)
        mean = self.raw_advantages.mean()
        std = self.raw_advantages.std()
        self.advantages = (self.raw_advantages - mean) / (std + 1e-8)

    def minibatches(self, rng: np.random.Generator, size: int):
        order = rng.permutation(self.obs.shape[0])
        for start in range(0, order.size, size):
            idx = order[start : start + size]
            yield MiniBatch(
                obs=self.obs[idx],
                actions=self.actions[idx],
                log_prob_old=self.log_probs[idx],
                advantages=self.advantages[idx],
                returns=self.returns[idx],
            )


@dataclass
class UpdateStats:
    """One stats row per PPO update, in stats-CSV column order."""

    episode: int
    mean_reward: float
    best_similarity: float
    surrogate_loss: float
    value_loss: float
    clip_fraction: float
    std: float

    CSV_HEADER = "episode,mean_reward,best_similarity,surrogate_loss,value_loss,clip_fraction,std"

    def csv_row(self) -> str:
        return ",".join(
            [
                str(self.episode),
                repr(self.mean_reward),
                repr(self.best_similarity),
                repr(self.surrogate_loss),
                repr(self.value_loss),
                repr(self.clip_fraction),
                repr(self.std),
            ]
        )


class Adam:
    """Adam with bias correction, stepping a canonical parameter list in place."""

    def __init__(self, shapes, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]

    def step(self, param_list, grads) -> None:
        self.t += 1
        correction1 = 1.0 - self.beta1**self.t
        correction2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(param_list, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g**2
            p -= self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)

    def state_dict(self) -> dict:
        return {"t": self.t, "m": self.m, "v": self.v}

    def load_state(self, state: dict) -> None:
        self.t = int(state["t"])
        for dst, src in zip(self.m, state["m"]):
            dst[...] = src
        for dst, src in zip(self.v, state["v"]):
            dst[...] = src


@dataclass
class TrainResult:
    params: PolicyParams
    episode: int
    updates: int
    stats: list[UpdateStats]
    stopped_early: bool
    final_checkpoint: Path | None = None


class StatsWriter:
    """Append-only stats CSV with a stable header and full-precision floats."""

    def __init__(self, path, append: bool = False):
        self.path = Path(path)
        mode = "a" if append and self.path.exists() else "w"
        self._handle = open(self.path, mode)
        if mode == "w":
            self._handle.write(UpdateStats.CSV_HEADER + "\n")
            self._handle.flush()

    def write(self, stats: UpdateStats) -> None:
        self._handle.write(stats.csv_row() + "\n")
        self._handle.flush()

    def close(self) -> None:
        self._handle.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _collect_episode(
    env: ArticulatoryEnv,
    episode_config: EpisodeConfig,
    params: PolicyParams,
    backend: AcousticBackend,
    rng: np.random.Generator,
):
    """Roll one episode; returns buffer arrays plus reward/similarity summaries."""
    horizon = episode_config.horizon
    obs_dim = params.arch.obs_dim
    obs_buf = np.empty((horizon, obs_dim))
    act_buf = np.empty((horizon, params.arch.act_dim))
    logp_buf = np.empty(horizon)
    rew_buf = np.empty(horizon)
    val_buf = np.empty(horizon)

    obs = env.reset(episode_config).reshape(-1)
    best_similarity = -1.0
    for t in range(horizon):
        sample = sample_action(params, obs, rng)
        value = float(critic_forward(params, obs))
        next_obs, signal, done = env.step(sample.action_raw, backend)
        obs_buf[t] = obs
        act_buf[t] = sample.action_raw
        logp_buf[t] = sample.log_prob
        rew_buf[t] = signal.value
        val_buf[t] = value
        if signal.detected:
            best_similarity = max(best_similarity, signal.similarity)
        obs = next_obs.reshape(-1)
    assert done
    return obs_buf, act_buf, logp_buf, rew_buf, val_buf, float(rew_buf.sum()), best_similarity


def train(
    cfg: TrainConfig,
    episode_config: EpisodeConfig,
    backend: AcousticBackend,
    *,
    env_factory: Callable[[], ArticulatoryEnv] = ArticulatoryEnv,
    stats_path=None,
    checkpoint_dir=None,
    on_update: Callable[[UpdateStats], None] | None = None,
    resume_from=None,
) -> TrainResult:
    """Run the PPO loop until total_episodes or the stopping rule fires.

    Emits one UpdateStats row per update (optionally appended to a stats CSV)
    and checkpoints every ``checkpoint_every_updates`` updates plus at the
    end. ``resume_from`` restores parameters, optimizer moments, RNG state,
    and counters from a checkpoint so the continuation is bit-identical to an
    uninterrupted run.
    """
    cfg.validate()
    episode_config.validate()
    arch = cfg.arch()

    if resume_from is not None:
        state = ckpt.load_checkpoint(resume_from)
        params = state.params
        if params.arch != arch:
            raise ConfigError(f"checkpoint arch {params.arch} != configured arch {arch}")
        adam = Adam([p.shape for p in params.param_list()],
                    cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
        adam.load_state(state.adam_state)
        rng = np.random.default_rng()
        rng.bit_generator.state = state.rng_state
        episode = state.episode
        update_index = state.update_index
    else:
        params = init_policy(cfg.seed, arch)
        adam = Adam([p.shape for p in params.param_list()],
                    cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
        rng = np.random.default_rng(cfg.seed)
        episode = 0
        update_index = 0

    checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir is not None else None
    if checkpoint_dir is not None:
        checkpoint_dir.mkdir(parents=True, exist_ok=True)

    def save(path: Path) -> Path:
        ckpt.save_checkpoint(
            path,
            params=params,
            adam_state=adam.state_dict(),
            rng_state=rng.bit_generator.state,
            episode=episode,
            update_index=update_index,
            train_cfg=cfg,
            episode_config=episode_config,
            backend_descriptor=backend.descriptor,
        )
        return path

    writer = StatsWriter(stats_path, append=resume_from is not None) if stats_path else None
    env = env_factory()
    spec = cfg.loss_spec()
    stats_rows: list[UpdateStats] = []
    stop_streak = 0
    stopped_early = False
    # snapshot of the last completed update, used for resumable aborts
    snapshot = None

    try:
        while episode < cfg.total_episodes:
            std = std_schedule(episode, cfg)
            params.log_std[:] = min(max(math.log(std), LOG_STD_MIN), LOG_STD_MAX)

            buffer = RolloutBuffer()
            episode_rewards = []
            episode_best = []
            try:
                for _ in range(cfg.episodes_per_update):
                    (obs_b, act_b, logp_b, rew_b, val_b,
                     total_reward, best_sim) = _collect_episode(
                        env, episode_config, params, backend, rng
                    )
                    buffer.add_episode(obs_b, act_b, logp_b, rew_b, val_b)
                    episode_rewards.append(total_reward)
                    episode_best.append(best_sim)
            except BackendError:
                if checkpoint_dir is not None and snapshot is not None:
                    params, adam_state, rng_state, episode, update_index = snapshot
                    adam.load_state(adam_state)
                    rng.bit_generator.state = rng_state
                    save(checkpoint_dir / "abort.npz")
                    log.error("backend failure; resumable checkpoint written to abort.npz")
                raise

            buffer.finalize(cfg.gamma, cfg.gae_lambda)

            loss_sum = np.zeros(4)
            n_batches = 0
            try:
                for _ in range(cfg.epochs_per_update):
                    for batch in buffer.minibatches(rng, cfg.minibatch_size):
                        components, grads = loss_and_gradients(params, batch, spec)
                        adam.step(params.param_list(), grads)
                        params.log_std[:] = min(max(math.log(std), LOG_STD_MIN), LOG_STD_MAX)
                        loss_sum += (
                            components.surrogate,
                            components.value,
                            components.clip_fraction,
                            components.total,
                        )
                        n_batches += 1
            except NumericError:
                if checkpoint_dir is not None:
                    np.savez(
                        checkpoint_dir / "diagnostic.npz",
                        obs=buffer.obs,
                        actions=buffer.actions,
                        log_probs=buffer.log_probs,
                        advantages=buffer.advantages,
                        returns=buffer.returns,
                        flat_params=params.get_flat(),
                    )
                raise

            episode += cfg.episodes_per_update
            update_index += 1
            stats = UpdateStats(
                episode=episode,
                mean_reward=float(np.mean(episode_rewards)),
                best_similarity=float(np.max(episode_best)),
                surrogate_loss=float(loss_sum[0] / n_batches),
                value_loss=float(loss_sum[1] / n_batches),
                clip_fraction=float(loss_sum[2] / n_batches),
                std=std,
            )
            stats_rows.append(stats)
            if writer:
                writer.write(stats)
            if on_update:
                on_update(stats)
            if update_index % 25 == 0:
                log.info(
                    "update %d: episode=%d mean_reward=%.3f best_similarity=%.3f std=%.2f",
                    update_index, episode, stats.mean_reward, stats.best_similarity, std,
                )

            snapshot = (
                params.copy(),
                {"t": adam.t, "m": [m.copy() for m in adam.m], "v": [v.copy() for v in adam.v]},
                rng.bit_generator.state,
                episode,
                update_index,
            )

            if checkpoint_dir is not None and update_index % cfg.checkpoint_every_updates == 0:
                save(checkpoint_dir / f"ckpt_{episode:07d}.npz")

            if cfg.stop_similarity is not None and episode >= cfg.stop_min_episodes:
                if stats.best_similarity >= cfg.stop_similarity:
                    stop_streak += 1
                else:
                    stop_streak = 0
                if stop_streak >= cfg.stop_consecutive:
                    stopped_early = True
                    log.info("stopping rule fired at episode %d", episode)
                    break
    finally:
        if writer:
            writer.close()

    final_path = None
    if checkpoint_dir is not None:
        final_path = save(checkpoint_dir / "final.npz")

    return TrainResult(
        params=params,
        episode=episode,
        updates=update_index,
        stats=stats_rows,
        stopped_early=stopped_early,
        final_checkpoint=final_path,
    )
