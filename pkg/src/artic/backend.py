"""Decode-and-perceive backends: the scoring side of the learning loop.

A backend turns an articulator trajectory into audio, detects syllables in
it, and scores the most recently detected syllable against a target
embedding. ``ReferenceBackend`` is the built-in deterministic implementation
(source-filter synthesis + log-mel embeddings); ``artic.bridge`` provides a
client for external backends speaking the same contract over a wire
protocol.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np

from . import perception, synth, wavio
from .env import RewardSignal
from .errors import CompatibilityError, EmptyInputError, TargetError
from .frames import FRAME_DIM, Trajectory


@dataclass(frozen=True)
class BackendDescriptor:
    name: str
    embedding_dim: int
    kind: str  # "reference" or "bridge"


@dataclass(frozen=True, eq=False)
class SyllableEmbedding:
    """Fixed-dimension, unit-comparable vector describing one syllable."""

    values: np.ndarray

    @property
    def dim(self) -> int:
        return int(np.asarray(self.values).shape[0])


@dataclass(frozen=True, eq=False)
class Waveform:
    samples: np.ndarray
    sample_rate: int = synth.DEFAULT_SAMPLE_RATE

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True, eq=False)
class SyllableSegment:
    start_sample: int
    end_sample: int
    embedding: SyllableEmbedding


@runtime_checkable
class AcousticBackend(Protocol):
    """Contract the environment and trainer rely on."""

    @property
    def descriptor(self) -> BackendDescriptor: ...

    def score(
        self, trajectory: Trajectory, target: SyllableEmbedding, step_duration: float = 0.02
    ) -> RewardSignal: ...

    def make_target(self, source, step_duration: float = 0.02) -> SyllableEmbedding: ...


@dataclass
class _ScoreCache:
    """Rendered prefix of the trajectory currently being scored."""

    step_duration: float
    frames: np.ndarray       # (n, 13) copy of the rendered prefix
    samples: np.ndarray      # n * span rendered samples
    logmel_rows: np.ndarray  # rows for every full analysis window so far


class ReferenceBackend:
    """Deterministic in-process backend; safe to replicate per worker.

    Scoring keeps a single-slot render cache so per-step scoring of a growing
    trajectory re-renders only the new step (causal synthesis makes the cached
    prefix exact). The cache is per-instance; give each concurrent rollout its
    own instance.
    """

    def __init__(
        self,
        sample_rate: int = synth.DEFAULT_SAMPLE_RATE,
        rms_threshold: float = perception.RMS_THRESHOLD,
        min_syllable_s: float = perception.MIN_SYLLABLE_SECONDS,
    ):
        self.sample_rate = int(sample_rate)
        self.rms_threshold = float(rms_threshold)
        self.min_syllable_s = float(min_syllable_s)
        self._cache: _ScoreCache | None = None

    @property
    def descriptor(self) -> BackendDescriptor:
        return BackendDescriptor("reference", perception.MEL_BANDS, "reference")

    # ----- pure pipeline stages -------------------------------------------

    def synthesize(self, trajectory: Trajectory, step_duration: float = 0.02) -> Waveform:
        samples = synth.synthesize_frames(trajectory.frames, step_duration, self.sample_rate)
        return Waveform(samples, self.sample_rate)

    def detect_syllables(self, waveform: Waveform) -> list[SyllableSegment]:
        ranges = perception.segment_ranges(
            waveform.samples, waveform.sample_rate, self.rms_threshold, self.min_syllable_s
        )
        return [
            SyllableSegment(s, e, self.embed(waveform, s, e)) for s, e in ranges
        ]

    def embed(self, waveform: Waveform, start: int, end: int) -> SyllableEmbedding:
        values = perception.embed_range(waveform.samples, waveform.sample_rate, start, end)
        return SyllableEmbedding(values)

    @staticmethod
    def cosine(a: SyllableEmbedding, b: SyllableEmbedding) -> float:
        return perception.cosine(a.values, b.values)

    # ----- scoring ---------------------------------------------------------

    def score(
        self, trajectory: Trajectory, target: SyllableEmbedding, step_duration: float = 0.02
    ) -> RewardSignal:
        """Score the trajectory decoded so far against the target syllable."""
        frames = trajectory.frames
        if frames.shape[0] == 0:
            raise EmptyInputError("cannot score an empty trajectory")
        if target.dim != perception.MEL_BANDS:
            raise CompatibilityError(
                f"target embedding dim {target.dim} != backend dim {perception.MEL_BANDS}"
            )

        samples, rows = self._rendered(frames, step_duration)
        ranges = perception.segment_ranges(
            samples, self.sample_rate, self.rms_threshold, self.min_syllable_s
        )
        if not ranges:
            return RewardSignal.miss()

        start, end = ranges[-1]
        embedding = self._embed_cached(rows, start, end)
        similarity = perception.cosine(embedding, np.asarray(target.values, dtype=float))
        return RewardSignal(value=similarity, detected=True, similarity=similarity)

    def reset_cache(self) -> None:
        self._cache = None

    def _rendered(self, frames: np.ndarray, step_duration: float) -> tuple[np.ndarray, np.ndarray]:
        """Samples + log-mel rows for the frames, reusing the cached prefix."""
        span = synth.samples_per_frame(step_duration, self.sample_rate)
        n = frames.shape[0]
        cache = self._cache
        if (
            cache is not None
            and cache.step_duration == step_duration
            and cache.frames.shape[0] <= n
            and np.array_equal(frames[: cache.frames.shape[0]], cache.frames)
        ):
            n_done = cache.frames.shape[0]
            samples = cache.samples
            rows = cache.logmel_rows
        else:
            n_done = 0
            samples = np.empty(0)
            rows = np.zeros((0, perception.MEL_BANDS))

        if n_done < n:
            prev = cache.frames[-1] if n_done else np.zeros(FRAME_DIM)
            new = np.empty((n - n_done) * span)
            for k in range(n_done, n):
                new[(k - n_done) * span : (k - n_done + 1) * span] = synth.render_span(
                    prev, frames[k], k, span, self.sample_rate
                )
                prev = frames[k]
            samples = np.concatenate([samples, new])
            rows = self._extend_rows(rows, samples)
            self._cache = _ScoreCache(step_duration, frames.copy(), samples, rows)
        return samples, rows

    def _extend_rows(self, rows: np.ndarray, samples: np.ndarray) -> np.ndarray:
        win = perception.window_length(self.sample_rate)
        hop = perception.hop_length(self.sample_rate)
        total = 0 if samples.size < win else (samples.size - win) // hop + 1
        have = rows.shape[0]
        if total <= have:
            return rows
        first_new = have * hop
        fresh = perception.logmel_frames(samples[first_new:], self.sample_rate)[: total - have]
        return np.concatenate([rows, fresh], axis=0)

    def _embed_cached(self, rows: np.ndarray, start: int, end: int) -> np.ndarray:
        win = perception.window_length(self.sample_rate)
        hop = perception.hop_length(self.sample_rate)
        first = -(-start // hop)  # ceil(start / hop)
        last = (end - win) // hop  # last window fully inside [start, end)
        segment_rows = np.ascontiguousarray(rows[first : last + 1])
        return perception.embedding_from_rows(segment_rows)

    # ----- targets ---------------------------------------------------------

    def make_target(self, source, step_duration: float = 0.02) -> SyllableEmbedding:
        """Embedding of the last detected syllable of a trajectory or WAV file.

        WAV input is resampled to the backend rate by linear interpolation
        when needed.
        """
        if isinstance(source, Trajectory):
            waveform = self.synthesize(source, step_duration)
        elif isinstance(source, (str, Path)):
            samples, rate = wavio.read_wav(source)
            if rate != self.sample_rate:
                samples = wavio.resample_linear(samples, rate, self.sample_rate)
            waveform = Waveform(samples, self.sample_rate)
        else:
            raise TargetError(f"unsupported target source: {type(source).__name__}")

        ranges = perception.segment_ranges(
            waveform.samples, waveform.sample_rate, self.rms_threshold, self.min_syllable_s
        )
        if not ranges:
            raise TargetError("no syllable detected in target source")
        start, end = ranges[-1]
        return self.embed(waveform, start, end)
