"""Energy-based syllable detection and log-mel syllable embeddings.

Detection: RMS over 10 ms hops; a syllable segment is a maximal run of frames
with RMS >= 0.02 lasting at least 60 ms (both thresholds overridable).

Embedding: 40-band log-mel spectrogram (25 ms windows, 10 ms hop, power floor
1e-10 before the log), averaged over time, mean-subtracted, then
L2-normalized. The mean subtraction cancels global gain, so embeddings encode
spectral shape rather than loudness.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import (
    DegenerateSegmentError,
    SegmentTooShort,
    ShapeError,
    UndefinedSimilarityError,
)

MEL_BANDS = 40
# Band placement concentrates on the formant region; energy far above it is
# dominated by the synthesizer's common spectral rolloff, which would swamp
# the posture-dependent differences the embedding is meant to capture.
MEL_FMIN_HZ = 100.0
MEL_FMAX_HZ = 3000.0
WINDOW_SECONDS = 0.025
HOP_SECONDS = 0.010
LOG_FLOOR = 1e-10
RMS_THRESHOLD = 0.02
MIN_SYLLABLE_SECONDS = 0.06


def window_length(sample_rate: int) -> int:
    return int(round(WINDOW_SECONDS * sample_rate))


def hop_length(sample_rate: int) -> int:
    return int(round(HOP_SECONDS * sample_rate))


def _fft_length(win: int) -> int:
    n = 1
    while n < win:
        n *= 2
    return n


def _hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=float) / 700.0)


def _mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=float) / 2595.0) - 1.0)


@lru_cache(maxsize=8)
def mel_filterbank(sample_rate: int, n_fft: int, n_mels: int = MEL_BANDS) -> np.ndarray:
    """(n_mels, n_fft // 2 + 1) triangular filters on the HTK mel scale."""
    fmax = min(MEL_FMAX_HZ, sample_rate / 2.0)
    mel_points = np.linspace(_hz_to_mel(MEL_FMIN_HZ), _hz_to_mel(fmax), n_mels + 2)
    hz_points = _mel_to_hz(mel_points)
    bin_freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft

    bank = np.zeros((n_mels, bin_freqs.size))
    for m in range(n_mels):
        left, center, right = hz_points[m], hz_points[m + 1], hz_points[m + 2]
        up = (bin_freqs - left) / max(center - left, 1e-12)
        down = (right - bin_freqs) / max(right - center, 1e-12)
        bank[m] = np.clip(np.minimum(up, down), 0.0, None)
    return bank


@lru_cache(maxsize=8)
def _hann(win: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(win) / win)


def logmel_frames(samples: np.ndarray, sample_rate: int) -> np.ndarray:
    """(n_frames, MEL_BANDS) log-mel rows for every full analysis window.

    Windows start at multiples of the hop and must fit entirely inside the
    sample range; a signal shorter than one window yields zero rows.
    """
    samples = np.asarray(samples, dtype=float)
    win = window_length(sample_rate)
    hop = hop_length(sample_rate)
    if samples.size < win:
        return np.zeros((0, MEL_BANDS))
    n_frames = (samples.size - win) // hop + 1
    offsets = np.arange(n_frames) * hop
    framed = samples[offsets[:, None] + np.arange(win)[None, :]] * _hann(win)[None, :]
    n_fft = _fft_length(win)
    spectrum = np.fft.rfft(framed, n=n_fft, axis=1)
    power = spectrum.real**2 + spectrum.imag**2
    mel = power @ mel_filterbank(sample_rate, n_fft).T
    return np.log(np.maximum(mel, LOG_FLOOR))


def embedding_from_rows(rows: np.ndarray) -> np.ndarray:
    """Collapse log-mel rows to one unit-norm, gain-invariant vector."""
    if rows.shape[0] == 0:
        raise SegmentTooShort("segment shorter than one analysis window")
    profile = rows.mean(axis=0)
    centered = profile - profile.mean()
    norm = float(np.linalg.norm(centered))
    if norm == 0.0:
        raise DegenerateSegmentError("segment spectrum has no variance")
    return centered / norm


def embed_range(samples: np.ndarray, sample_rate: int, start: int, end: int) -> np.ndarray:
    """Embed samples[start:end]; the range must hold one full window."""
    samples = np.asarray(samples, dtype=float)
    if not (0 <= start < end <= samples.size):
        raise ShapeError(f"invalid sample range [{start}, {end}) for length {samples.size}")
    if end - start < window_length(sample_rate):
        raise SegmentTooShort(
            f"range of {end - start} samples is shorter than one "
            f"{window_length(sample_rate)}-sample window"
        )
    return embedding_from_rows(logmel_frames(samples[start:end], sample_rate))


def rms_frames(samples: np.ndarray, sample_rate: int) -> np.ndarray:
    """Per-hop RMS; the final partial hop (if any) is measured at its true length."""
    samples = np.asarray(samples, dtype=float)
    hop = hop_length(sample_rate)
    n_full = samples.size // hop
    out = np.empty(n_full + (1 if samples.size % hop else 0))
    if n_full:
        blocks = samples[: n_full * hop].reshape(n_full, hop)
        out[:n_full] = np.sqrt(np.mean(blocks**2, axis=1))
    if samples.size % hop:
        tail = samples[n_full * hop :]
        out[n_full] = np.sqrt(np.mean(tail**2))
    return out


def segment_ranges(
    samples: np.ndarray,
    sample_rate: int,
    rms_threshold: float = RMS_THRESHOLD,
    min_duration_s: float = MIN_SYLLABLE_SECONDS,
) -> list[tuple[int, int]]:
    """Maximal loud runs as half-open sample ranges, time-ordered."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        return []
    hop = hop_length(sample_rate)
    loud = rms_frames(samples, sample_rate) >= rms_threshold
    min_samples = int(round(min_duration_s * sample_rate))

    ranges: list[tuple[int, int]] = []
    run_start: int | None = None
    for i, flag in enumerate(loud):
        if flag and run_start is None:
            run_start = i
        elif not flag and run_start is not None:
            ranges.append((run_start * hop, i * hop))
            run_start = None
    if run_start is not None:
        ranges.append((run_start * hop, int(samples.size)))
    return [(s, e) for s, e in ranges if e - s >= min_samples]


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; zero vectors have no defined similarity."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"dimension mismatch: {a.shape} vs {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise UndefinedSimilarityError("cosine similarity of a zero vector is undefined")
    return float(np.clip(np.dot(a, b) / (norm_a * norm_b), -1.0, 1.0))
