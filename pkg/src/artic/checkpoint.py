"""Versioned checkpoint blobs with bit-exact round-trips.

A checkpoint is a numpy .npz archive holding the flat parameter arrays in
canonical order, the Adam moments, the training RNG state, counters, and the
JSON-encoded run metadata (training config, episode config including the
target embedding, backend descriptor). Arrays are stored raw, so
save -> load -> save reproduces every float bit.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .backend import BackendDescriptor, SyllableEmbedding
from .env import EpisodeConfig
from .errors import CompatibilityError, ConfigError
from .policy import ArchConfig, PolicyParams

CHECKPOINT_VERSION = 1


@dataclass
class CheckpointState:
    params: PolicyParams
    adam_state: dict
    rng_state: dict
    episode: int
    update_index: int
    train_cfg: dict
    episode_config: EpisodeConfig
    backend_descriptor: BackendDescriptor


def _params_from_arrays(arch: ArchConfig, arrays: list[np.ndarray]) -> PolicyParams:
    n_actor = len(arch.hidden) + 1
    actor, critic = [], []
    it = iter(arrays)
    for _ in range(n_actor):
        actor.append((next(it), next(it)))
    for _ in range(n_actor):
        critic.append((next(it), next(it)))
    log_std = next(it)
    return PolicyParams(arch, actor, critic, log_std)


def save_checkpoint(
    path,
    *,
    params: PolicyParams,
    adam_state: dict,
    rng_state: dict,
    episode: int,
    update_index: int,
    train_cfg,
    episode_config: EpisodeConfig,
    backend_descriptor: BackendDescriptor,
) -> None:
    path = Path(path)
    arrays = {}
    for i, p in enumerate(params.param_list()):
        arrays[f"p{i}"] = p
    for i, m in enumerate(adam_state["m"]):
        arrays[f"adam_m{i}"] = m
    for i, v in enumerate(adam_state["v"]):
        arrays[f"adam_v{i}"] = v
    arrays["target_values"] = np.asarray(episode_config.target.values, dtype=float)

    meta = {
        "version": CHECKPOINT_VERSION,
        "arch": {
            "obs_dim": params.arch.obs_dim,
            "act_dim": params.arch.act_dim,
            "hidden": list(params.arch.hidden),
        },
        "adam_t": int(adam_state["t"]),
        "rng_state": rng_state,
        "episode": int(episode),
        "update_index": int(update_index),
        "train_cfg": asdict(train_cfg) if not isinstance(train_cfg, dict) else train_cfg,
        "episode_config": {
            "horizon": episode_config.horizon,
            "step_duration": episode_config.step_duration,
            "reward_mode": episode_config.reward_mode,
            "target_id": episode_config.target_id,
        },
        "backend": {
            "name": backend_descriptor.name,
            "embedding_dim": backend_descriptor.embedding_dim,
            "kind": backend_descriptor.kind,
        },
    }
    arrays["meta_json"] = np.array(json.dumps(meta))

    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as handle:
        np.savez(handle, **arrays)
    tmp.replace(path)


def load_checkpoint(path) -> CheckpointState:
    path = Path(path)
    with np.load(path, allow_pickle=False) as blob:
        meta = json.loads(str(blob["meta_json"][()]))
        if meta["version"] != CHECKPOINT_VERSION:
            raise CompatibilityError(
                f"checkpoint version {meta['version']} != supported {CHECKPOINT_VERSION}"
            )
        arch = ArchConfig(
            obs_dim=meta["arch"]["obs_dim"],
            act_dim=meta["arch"]["act_dim"],
            hidden=tuple(meta["arch"]["hidden"]),
        )
        n_params = 4 * (len(arch.hidden) + 1) + 1
        arrays = [blob[f"p{i}"].copy() for i in range(n_params)]
        params = _params_from_arrays(arch, arrays)
        adam_state = {
            "t": meta["adam_t"],
            "m": [blob[f"adam_m{i}"].copy() for i in range(n_params)],
            "v": [blob[f"adam_v{i}"].copy() for i in range(n_params)],
        }
        target_values = blob["target_values"].copy()

    ep_meta = meta["episode_config"]
    episode_config = EpisodeConfig(
        target=SyllableEmbedding(target_values),
        horizon=int(ep_meta["horizon"]),
        step_duration=float(ep_meta["step_duration"]),
        reward_mode=ep_meta["reward_mode"],
        target_id=ep_meta["target_id"],
    )
    backend_meta = meta["backend"]
    descriptor = BackendDescriptor(
        backend_meta["name"], int(backend_meta["embedding_dim"]), backend_meta["kind"]
    )
    train_cfg = dict(meta["train_cfg"])
    if "hidden" in train_cfg and isinstance(train_cfg["hidden"], list):
        train_cfg["hidden"] = tuple(train_cfg["hidden"])

    state = CheckpointState(
        params=params,
        adam_state=adam_state,
        rng_state=meta["rng_state"],
        episode=meta["episode"],
        update_index=meta["update_index"],
        train_cfg=train_cfg,
        episode_config=episode_config,
        backend_descriptor=descriptor,
    )
    _sanity_check(state)
    return state


def _sanity_check(state: CheckpointState) -> None:
    for p in state.params.param_list():
        if not np.all(np.isfinite(p)):
            raise ConfigError("checkpoint contains non-finite parameters")
