"""Run configuration: flat key=value sections, diff-friendly.

Format (INI via configparser):

    [run]
    seed = 7
    out_dir = runs/oo

    [episode]
    horizon = 50
    step_duration = 0.02
    reward_mode = per_step

    [train]
    total_episodes = 20000
    lr = 3e-4
    ...any TrainConfig field...

    [backend]
    kind = reference            ; or: bridge
    endpoint = python -m artic.loopback   ; bridge only (command or host:port)
    sample_rate = 16000
    rms_threshold = 0.02
    min_syllable_s = 0.06

    [target]
    fixture = oo                ; exactly one of fixture / wav / bridge_syllable
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .backend import AcousticBackend, ReferenceBackend, SyllableEmbedding
from .env import EpisodeConfig, REWARD_MODES
from .errors import ConfigError
from .ppo import TrainConfig

BACKEND_KINDS = ("reference", "bridge")


@dataclass
class RunConfig:
    """Everything a training or evaluation run needs, resolved from one file."""

    seed: int = 0
    out_dir: Path = Path("runs/default")
    horizon: int = 50
    step_duration: float = 0.02
    reward_mode: str = "per_step"
    train: TrainConfig = dataclasses.field(default_factory=TrainConfig)
    backend_kind: str = "reference"
    bridge_endpoint: str = ""
    sample_rate: int = 16000
    rms_threshold: float = 0.02
    min_syllable_s: float = 0.06
    target_fixture: str = ""
    target_wav: str = ""
    target_bridge_syllable: str = ""

    def validate(self) -> None:
        if self.backend_kind not in BACKEND_KINDS:
            raise ConfigError(f"backend.kind must be one of {BACKEND_KINDS}, got {self.backend_kind!r}")
        if self.reward_mode not in REWARD_MODES:
            raise ConfigError(f"episode.reward_mode must be one of {REWARD_MODES}")
        sources = [s for s in (self.target_fixture, self.target_wav, self.target_bridge_syllable) if s]
        if len(sources) != 1:
            raise ConfigError(
                "exactly one of target.fixture / target.wav / target.bridge_syllable is required"
            )
        if self.target_wav and not Path(self.target_wav).exists():
            raise ConfigError(f"target.wav path does not exist: {self.target_wav}")
        if self.target_bridge_syllable and self.backend_kind != "bridge":
            raise ConfigError("target.bridge_syllable requires backend.kind = bridge")
        if self.backend_kind == "bridge" and not self.bridge_endpoint:
            raise ConfigError("backend.endpoint is required when backend.kind = bridge")
        self.train.validate()


_TRAIN_FIELDS = {f.name: f.type for f in dataclasses.fields(TrainConfig)}


def _parse_value(section: str, key: str, raw: str, to_type):
    try:
        if to_type is int:
            return int(raw)
        if to_type is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from exc


def load_run_config(path) -> RunConfig:
    """Parse and validate a run config file; errors carry section/key context."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    cfg = RunConfig()
    if parser.has_section("run"):
        sec = parser["run"]
        cfg.seed = _parse_value("run", "seed", sec.get("seed", str(cfg.seed)), int)
        cfg.out_dir = Path(sec.get("out_dir", str(cfg.out_dir)))
    if parser.has_section("episode"):
        sec = parser["episode"]
        cfg.horizon = _parse_value("episode", "horizon", sec.get("horizon", str(cfg.horizon)), int)
        cfg.step_duration = _parse_value(
            "episode", "step_duration", sec.get("step_duration", str(cfg.step_duration)), float
        )
        cfg.reward_mode = sec.get("reward_mode", cfg.reward_mode)

    train_kwargs = {}
    if parser.has_section("train"):
        for key, raw in parser["train"].items():
            if key not in _TRAIN_FIELDS:
                raise ConfigError(f"[train] unknown key: {key}")
            default = getattr(TrainConfig(), key)
            if key == "hidden":
                train_kwargs[key] = tuple(
                    _parse_value("train", key, part.strip(), int)
                    for part in raw.split(",") if part.strip()
                )
            elif key == "stop_similarity":
                train_kwargs[key] = None if raw.strip().lower() == "none" else _parse_value(
                    "train", key, raw, float
                )
            elif isinstance(default, bool):
                train_kwargs[key] = raw.strip().lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                train_kwargs[key] = _parse_value("train", key, raw, int)
            elif isinstance(default, float) or default is None:
                train_kwargs[key] = _parse_value("train", key, raw, float)
            else:
                train_kwargs[key] = raw
    cfg.train = TrainConfig(**train_kwargs)

    if parser.has_section("backend"):
        sec = parser["backend"]
        cfg.backend_kind = sec.get("kind", cfg.backend_kind)
        cfg.bridge_endpoint = sec.get("endpoint", cfg.bridge_endpoint)
        cfg.sample_rate = _parse_value(
            "backend", "sample_rate", sec.get("sample_rate", str(cfg.sample_rate)), int
        )
        cfg.rms_threshold = _parse_value(
            "backend", "rms_threshold", sec.get("rms_threshold", str(cfg.rms_threshold)), float
        )
        cfg.min_syllable_s = _parse_value(
            "backend", "min_syllable_s", sec.get("min_syllable_s", str(cfg.min_syllable_s)), float
        )
    if parser.has_section("target"):
        sec = parser["target"]
        cfg.target_fixture = sec.get("fixture", "")
        cfg.target_wav = sec.get("wav", "")
        cfg.target_bridge_syllable = sec.get("bridge_syllable", "")

    for section in parser.sections():
        if section not in ("run", "episode", "train", "backend", "target"):
            raise ConfigError(f"unknown config section: [{section}]")

    cfg.train = dataclasses.replace(cfg.train, seed=cfg.seed)
    cfg.validate()
    return cfg


def build_backend(cfg: RunConfig) -> AcousticBackend:
    """Construct the configured backend (reference in-process, or bridge)."""
    if cfg.backend_kind == "reference":
        return ReferenceBackend(
            sample_rate=cfg.sample_rate,
            rms_threshold=cfg.rms_threshold,
            min_syllable_s=cfg.min_syllable_s,
        )
    from .bridge import BridgeBackend, connect

    session = connect(cfg.bridge_endpoint)
    return BridgeBackend(session)


def resolve_target(cfg: RunConfig, backend: AcousticBackend) -> tuple[SyllableEmbedding, str]:
    """Resolve the configured target source to (embedding, target_id)."""
    if cfg.target_fixture:
        from .targets import expert_trajectory

        trajectory = expert_trajectory(cfg.target_fixture, cfg.horizon)
        return backend.make_target(trajectory, cfg.step_duration), cfg.target_fixture
    if cfg.target_wav:
        return backend.make_target(cfg.target_wav, cfg.step_duration), Path(cfg.target_wav).stem
    from .bridge import BridgeBackend

    if not isinstance(backend, BridgeBackend):
        raise ConfigError("bridge_syllable target requires a bridge backend")
    return backend.make_target_text(cfg.target_bridge_syllable), cfg.target_bridge_syllable


def episode_config_from(cfg: RunConfig, target: SyllableEmbedding, target_id: str) -> EpisodeConfig:
    return EpisodeConfig(
        target=target,
        horizon=cfg.horizon,
        step_duration=cfg.step_duration,
        reward_mode=cfg.reward_mode,
        target_id=target_id,
    )
