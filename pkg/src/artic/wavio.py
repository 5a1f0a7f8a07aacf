"""Mono 16-bit PCM WAV reading/writing plus linear resampling."""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

from .errors import ConfigError


def write_wav(path, samples: np.ndarray, sample_rate: int) -> None:
    """Write float samples in [-1, 1] as 16-bit mono little-endian PCM."""
    samples = np.asarray(samples, dtype=float)
    ints = np.round(np.clip(samples, -1.0, 1.0) * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as handle:
        handle.setnchannels(1)
        handle.setsampwidth(2)
        handle.setframerate(int(sample_rate))
        handle.writeframes(ints.tobytes())


def read_wav(path) -> tuple[np.ndarray, int]:
    """Read a mono 16-bit PCM WAV into float samples in [-1, 1]."""
    path = Path(path)
    with wave.open(str(path), "rb") as handle:
        if handle.getnchannels() != 1:
            raise ConfigError(f"{path}: expected mono audio, got {handle.getnchannels()} channels")
        if handle.getsampwidth() != 2:
            raise ConfigError(f"{path}: expected 16-bit samples, got {8 * handle.getsampwidth()}-bit")
        sample_rate = handle.getframerate()
        raw = handle.readframes(handle.getnframes())
    samples = np.frombuffer(raw, dtype="<i2").astype(float) / 32767.0
    return samples, sample_rate


def resample_linear(samples: np.ndarray, rate_from: int, rate_to: int) -> np.ndarray:
    """Linear-interpolation resampling between sample rates."""
    samples = np.asarray(samples, dtype=float)
    if rate_from == rate_to or samples.size == 0:
        return samples.copy()
    n_out = int(round(samples.size * rate_to / rate_from))
    t_out = np.arange(n_out) / rate_to
    t_in = np.arange(samples.size) / rate_from
    return np.interp(t_out, t_in, samples)
