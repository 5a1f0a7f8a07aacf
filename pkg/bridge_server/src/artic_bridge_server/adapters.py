"""Model adapters: the decoder/perceiver interface plus deterministic fakes.

The protocol carries trajectory rows as 13 columns in the fixed order
TD, TB, TT, LI, UL, LL (x then y per articulator), then loudness. A decoder's
native feature layout may order articulators differently and expect loudness
in its own units, so every trajectory passes through an explicit, unit-tested
channel map before decoding:

    decoder_loudness = loudness_scale * protocol_loudness + loudness_offset

The affine loudness constants default to (1/3, 0) - mapping the protocol's
[-3, 3] onto [-1, 1] - and must be calibrated per model release (see README).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

PROTOCOL_ARTICULATORS = ("TD", "TB", "TT", "LI", "UL", "LL")


@dataclass(frozen=True)
class ChannelMap:
    """Protocol row layout -> decoder feature layout."""

    articulator_order: tuple[str, ...] = PROTOCOL_ARTICULATORS
    loudness_scale: float = 1.0 / 3.0
    loudness_offset: float = 0.0

    def validate(self) -> None:
        if sorted(self.articulator_order) != sorted(PROTOCOL_ARTICULATORS):
            raise ValueError(
                f"articulator_order must be a permutation of {PROTOCOL_ARTICULATORS}, "
                f"got {self.articulator_order}"
            )

    def column_permutation(self) -> list[int]:
        """Decoder feature column -> protocol column, for the 12 positions."""
        order = []
        for name in self.articulator_order:
            base = 2 * PROTOCOL_ARTICULATORS.index(name)
            order.extend((base, base + 1))
        return order

    def apply(self, frames: np.ndarray) -> np.ndarray:
        """Map (n, 13) protocol rows to (n, 13) decoder features."""
        self.validate()
        out = np.empty_like(frames)
        out[:, :12] = frames[:, self.column_permutation()]
        out[:, 12] = self.loudness_scale * frames[:, 12] + self.loudness_offset
        return out


@dataclass(frozen=True)
class Segment:
    start_s: float
    end_s: float
    embedding: np.ndarray


class Decoder(Protocol):
    """Maps decoder-layout articulatory features to an audio waveform."""

    name: str

    def decode(self, features: np.ndarray, step_duration: float, sample_rate: int) -> np.ndarray: ...


class Perceiver(Protocol):
    """Detects syllables in audio and embeds each one."""

    name: str
    embedding_dim: int

    def perceive(self, samples: np.ndarray, sample_rate: int) -> list[Segment]: ...


# ---------------------------------------------------------------------------
# Deterministic fakes: stand-ins with the same interface, used for protocol
# testing when no pretrained artifacts are installed.
# ---------------------------------------------------------------------------


@dataclass
class FakeDecoder:
    """Loudness-gated tone whose pitch follows the first articulator height."""

    name: str = "fake-decoder"
    base_hz: float = 220.0

    def decode(self, features: np.ndarray, step_duration: float, sample_rate: int) -> np.ndarray:
        span = max(1, int(round(step_duration * sample_rate)))
        amp = np.clip(features[:, 12], 0.0, 1.0)
        hz = self.base_hz * (1.0 + 0.2 * np.tanh(features[:, 1]))
        amp_track = np.repeat(amp, span)
        hz_track = np.repeat(hz, span)
        phase = 2.0 * np.pi * np.cumsum(hz_track) / sample_rate
        return np.clip(amp_track * np.sin(phase), -1.0, 1.0)


@dataclass
class FakePerceiver:
    """Energy-gated detector with a coarse spectral-shape embedding."""

    name: str = "fake-perceiver"
    embedding_dim: int = 16
    rms_threshold: float = 0.02
    min_duration_s: float = 0.06

    def perceive(self, samples: np.ndarray, sample_rate: int) -> list[Segment]:
        hop = max(1, int(round(0.010 * sample_rate)))
        n_full = samples.size // hop
        if n_full == 0:
            return []
        blocks = samples[: n_full * hop].reshape(n_full, hop)
        loud = np.sqrt(np.mean(blocks**2, axis=1)) >= self.rms_threshold

        segments = []
        run_start = None
        for i, flag in enumerate([*loud, False]):
            if flag and run_start is None:
                run_start = i
            elif not flag and run_start is not None:
                start, end = run_start * hop, i * hop
                if (end - start) / sample_rate >= self.min_duration_s:
                    segments.append(
                        Segment(start / sample_rate, end / sample_rate,
                                self._embed(samples[start:end]))
                    )
                run_start = None
        return segments

    def _embed(self, segment: np.ndarray) -> np.ndarray:
        spectrum = np.abs(np.fft.rfft(segment)) ** 2
        bands = np.array_split(spectrum, self.embedding_dim)
        profile = np.log(np.maximum(np.array([b.sum() for b in bands]), 1e-10))
        centered = profile - profile.mean()
        norm = np.linalg.norm(centered)
        if norm == 0.0:
            centered = np.zeros(self.embedding_dim)
            centered[0] = 1.0
            return centered
        return centered / norm


def fake_models() -> tuple[FakeDecoder, FakePerceiver]:
    return FakeDecoder(), FakePerceiver()
