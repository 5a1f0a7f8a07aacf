"""MLP actor-critic with a diagonal-Gaussian head and exact gradients.

Forward passes, sampling, and reverse-mode gradients are implemented directly
on numpy arrays so that training is bit-reproducible and gradients can be
validated against finite differences. The actor maps a flat 195-dim
observation to 13 action means through two tanh hidden layers; the critic has
the same trunk shape with a scalar output. The per-dimension log standard
deviation is state-independent and, during scheduled training, is overridden
by the exploration schedule rather than learned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericError, ShapeError
from .frames import FRAME_DIM, OBS_DIM

STD_INIT = 0.7
STD_FLOOR = 0.05
LOG_STD_MIN = math.log(STD_FLOOR)
LOG_STD_MAX = math.log(STD_INIT)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ArchConfig:
    """Layer sizes for both networks (hidden sizes shared by actor/critic)."""

    obs_dim: int = OBS_DIM
    act_dim: int = FRAME_DIM
    hidden: tuple[int, ...] = (256, 256)

    def validate(self) -> None:
        if self.obs_dim < 1 or self.act_dim < 1 or not self.hidden:
            raise ConfigError(f"invalid architecture: {self}")
        if any(h < 1 for h in self.hidden):
            raise ConfigError(f"zero-width hidden layer in {self.hidden}")

    def layer_sizes(self, out_dim: int) -> list[tuple[int, int]]:
        dims = [self.obs_dim, *self.hidden, out_dim]
        return [(dims[i], dims[i + 1]) for i in range(len(dims) - 1)]


class PolicyParams:
    """Actor weights, critic weights, and log_std, in a canonical flat order.

    The canonical parameter order is: actor (W, b) per layer, critic (W, b)
    per layer, then log_std. Weight matrices are (fan_in, fan_out) and stored
    row-major, so forward passes are ``x @ W + b``.
    """

    def __init__(self, arch: ArchConfig, actor, critic, log_std):
        self.arch = arch
        self.actor_w = [w for w, _ in actor]
        self.actor_b = [b for _, b in actor]
        self.critic_w = [w for w, _ in critic]
        self.critic_b = [b for _, b in critic]
        self.log_std = log_std

    def param_list(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for w, b in zip(self.actor_w, self.actor_b):
            out.extend((w, b))
        for w, b in zip(self.critic_w, self.critic_b):
            out.extend((w, b))
        out.append(self.log_std)
        return out

    def param_count(self) -> int:
        return sum(p.size for p in self.param_list())

    def actor_param_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.actor_w, self.actor_b))

    def copy(self) -> "PolicyParams":
        return PolicyParams(
            self.arch,
            [(w.copy(), b.copy()) for w, b in zip(self.actor_w, self.actor_b)],
            [(w.copy(), b.copy()) for w, b in zip(self.critic_w, self.critic_b)],
            self.log_std.copy(),
        )

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.param_list()])

    def set_flat(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.size != self.param_count():
            raise ShapeError(f"expected {self.param_count()} values, got {flat.size}")
        offset = 0
        for p in self.param_list():
            p[...] = flat[offset : offset + p.size].reshape(p.shape)
            offset += p.size


def init_policy(seed: int, arch: ArchConfig = ArchConfig()) -> PolicyParams:
    """Deterministic scaled-uniform fan-in initialization; std starts at 0.7."""
    arch.validate()
    rng = np.random.default_rng(seed)

    def layers(out_dim: int):
        built = []
        for fan_in, fan_out in arch.layer_sizes(out_dim):
            bound = 1.0 / math.sqrt(fan_in)
            built.append((rng.uniform(-bound, bound, size=(fan_in, fan_out)), np.zeros(fan_out)))
        return built

    actor = layers(arch.act_dim)
    critic = layers(1)
    log_std = np.full(arch.act_dim, LOG_STD_MAX)
    return PolicyParams(arch, actor, critic, log_std)


def zero_policy(arch: ArchConfig = ArchConfig()) -> PolicyParams:
    """All-zero weights/biases; useful as the degenerate untrained baseline."""
    arch.validate()
    actor = [(np.zeros((i, o)), np.zeros(o)) for i, o in arch.layer_sizes(arch.act_dim)]
    critic = [(np.zeros((i, o)), np.zeros(o)) for i, o in arch.layer_sizes(1)]
    return PolicyParams(arch, actor, critic, np.full(arch.act_dim, LOG_STD_MAX))


def _check_obs(params: PolicyParams, obs: np.ndarray) -> np.ndarray:
    obs = np.asarray(obs, dtype=float)
    if obs.shape[-1] != params.arch.obs_dim:
        raise ShapeError(
            f"observation dim {obs.shape[-1]} != expected {params.arch.obs_dim}"
        )
    return obs


def _mlp_forward(ws, bs, x: np.ndarray) -> list[np.ndarray]:
    """Return the list of activations: input, each tanh hidden, linear output."""
    acts = [x]
    h = x
    for w, b in zip(ws[:-1], bs[:-1]):
        h = np.tanh(h @ w + b)
        acts.append(h)
    acts.append(h @ ws[-1] + bs[-1])
    return acts


def actor_forward(params: PolicyParams, obs: np.ndarray) -> np.ndarray:
    """Deterministic action mean for one observation or a batch."""
    obs = _check_obs(params, obs)
    return _mlp_forward(params.actor_w, params.actor_b, obs)[-1]


def critic_forward(params: PolicyParams, obs: np.ndarray):
    """State value estimate for one observation or a batch."""
    obs = _check_obs(params, obs)
    value = _mlp_forward(params.critic_w, params.critic_b, obs)[-1]
    return value[..., 0]


def gaussian_log_prob(actions: np.ndarray, mean: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    """Diagonal-Gaussian log density of unclamped actions."""
    z = (actions - mean) / np.exp(log_std)
    return -0.5 * np.sum(z**2, axis=-1) - np.sum(log_std) - actions.shape[-1] * _HALF_LOG_2PI


@dataclass(frozen=True)
class GaussianSample:
    action_raw: np.ndarray
    log_prob: float
    mean: np.ndarray
    std: np.ndarray


def sample_action(params: PolicyParams, obs: np.ndarray, rng: np.random.Generator) -> GaussianSample:
    """Draw an unclamped action; the environment clamps, log_prob does not."""
    mean = actor_forward(params, obs)
    std = np.exp(params.log_std)
    action = mean + std * rng.standard_normal(params.arch.act_dim)
    log_prob = float(gaussian_log_prob(action, mean, params.log_std))
    return GaussianSample(action_raw=action, log_prob=log_prob, mean=mean, std=std)


@dataclass(frozen=True)
class LossSpec:
    clip_eps: float = 0.2
    value_coef: float = 0.5
    entropy_coef: float = 0.0


@dataclass(frozen=True)
class MiniBatch:
    obs: np.ndarray         # (B, obs_dim)
    actions: np.ndarray     # (B, act_dim) unclamped rollout actions
    log_prob_old: np.ndarray  # (B,) rollout-time log-probs, never recomputed
    advantages: np.ndarray  # (B,) normalized advantages
    returns: np.ndarray     # (B,) GAE returns (value targets)

    def __len__(self) -> int:
        return self.obs.shape[0]


@dataclass(frozen=True)
class LossComponents:
    total: float
    surrogate: float
    value: float
    entropy: float
    clip_fraction: float


def _mlp_backward(ws, acts, d_out: np.ndarray):
    """Gradients of all (W, b) given d(loss)/d(output); returns input grad too."""
    grads = []
    delta = d_out
    for layer in range(len(ws) - 1, -1, -1):
        h_in = acts[layer]
        grads.append((h_in.T @ delta, delta.sum(axis=0)))
        delta = delta @ ws[layer].T
        if layer > 0:
            delta = delta * (1.0 - acts[layer] ** 2)
    grads.reverse()
    return grads, delta


def loss_and_gradients(
    params: PolicyParams, batch: MiniBatch, spec: LossSpec
) -> tuple[LossComponents, list[np.ndarray]]:
    """Clipped-surrogate + value + entropy loss and its exact gradients.

    Gradients come back in the canonical ``param_list`` order. Raises
    NumericError when the loss or the probability ratio goes non-finite.
    """
    if len(batch) == 0:
        raise ShapeError("minibatch must be non-empty")
    obs = _check_obs(params, batch.obs)
    b = len(batch)
    eps = spec.clip_eps

    actor_acts = _mlp_forward(params.actor_w, params.actor_b, obs)
    mean = actor_acts[-1]
    std = np.exp(params.log_std)
    z = (batch.actions - mean) / std
    log_prob = -0.5 * np.sum(z**2, axis=1) - np.sum(params.log_std) - mean.shape[1] * _HALF_LOG_2PI
    ratio = np.exp(log_prob - batch.log_prob_old)
    if not np.all(np.isfinite(ratio)):
        bad = int(np.flatnonzero(~np.isfinite(ratio))[0])
        raise NumericError(f"non-finite probability ratio at batch index {bad}")

    adv = batch.advantages
    unclipped = ratio * adv
    clipped = np.clip(ratio, 1.0 - eps, 1.0 + eps) * adv
    surrogate = -float(np.mean(np.minimum(unclipped, clipped)))
    clip_fraction = float(np.mean(np.abs(ratio - 1.0) > eps))

    critic_acts = _mlp_forward(params.critic_w, params.critic_b, obs)
    values = critic_acts[-1][:, 0]
    value_err = values - batch.returns
    value_loss = float(np.mean(value_err**2))

    entropy = float(np.sum(params.log_std) + mean.shape[1] * (0.5 + _HALF_LOG_2PI))

    total = surrogate + spec.value_coef * value_loss - spec.entropy_coef * entropy
    if not np.isfinite(total):
        raise NumericError("non-finite loss")

    # d(surrogate)/d(ratio): active branch is the unclipped term whenever it
    # attains the min or the ratio sits inside the clip band; otherwise the
    # clipped branch is flat in the parameters.
    take_unclipped = unclipped <= clipped
    inside_band = (ratio > 1.0 - eps) & (ratio < 1.0 + eps)
    d_min_d_ratio = np.where(take_unclipped | inside_band, adv, 0.0)
    d_log_prob = (-1.0 / b) * d_min_d_ratio * ratio

    d_mean = d_log_prob[:, None] * (z / std)
    actor_grads, _ = _mlp_backward(params.actor_w, actor_acts, d_mean)

    d_log_std = np.sum(d_log_prob[:, None] * (z**2 - 1.0), axis=0) - spec.entropy_coef

    d_values = spec.value_coef * (2.0 / b) * value_err
    critic_grads, _ = _mlp_backward(params.critic_w, critic_acts, d_values[:, None])

    grads: list[np.ndarray] = []
    for gw, gb in actor_grads:
        grads.extend((gw, gb))
    for gw, gb in critic_grads:
        grads.extend((gw, gb))
    grads.append(d_log_std)

    components = LossComponents(
        total=total,
        surrogate=surrogate,
        value=value_loss,
        entropy=entropy,
        clip_fraction=clip_fraction,
    )
    return components, grads
