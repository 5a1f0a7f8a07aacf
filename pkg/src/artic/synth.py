"""Deterministic source-filter synthesizer for articulator trajectories.

The voiced source is a band-limited pulse train at a fixed 120 Hz fundamental
(equal-amplitude cosine harmonics up to 0.45 * sample_rate). Three resonances
shape it, with centers driven by articulator positions:

    F1 = 500 + 200 * (-TD_y)    F2 = 1500 + 400 * (-TD_x)    F3 = 2500 + 150 * (-TT_y)

all clamped to [150, 0.45 * sample_rate] Hz. Output amplitude is
A = max(0, L) / 3 gated by the lip aperture g = clamp(UL_y - LL_y + 1, 0, 1).

Each trajectory frame is anchored at the END of its 20 ms span: during span k
the 13 raw articulator values ramp linearly from frame k-1 (the all-zero reset
state for k=0) to frame k, and the acoustic mapping is evaluated per sample.
This makes synthesis strictly causal, so rendering a prefix of a trajectory
yields bit-identical samples to the same prefix of the full render.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, EmptyInputError, ShapeError
from .frames import FRAME_DIM

F0_HZ = 120.0
FORMANT_BANDWIDTHS_HZ = (90.0, 110.0, 170.0)
MIN_FORMANT_HZ = 150.0
MAX_FORMANT_FRACTION = 0.45
DEFAULT_SAMPLE_RATE = 16000

# flat indices into a frame
_TD_X, _TD_Y, _TT_Y, _UL_Y, _LL_Y, _L = 0, 1, 5, 9, 11, 12


def samples_per_frame(step_duration: float, sample_rate: int) -> int:
    span = int(round(step_duration * sample_rate))
    if span < 1:
        raise ConfigError(
            f"step_duration {step_duration} too short for sample_rate {sample_rate}"
        )
    return span


def harmonic_frequencies(sample_rate: int) -> np.ndarray:
    """All multiples of the fundamental up to the formant ceiling."""
    ceiling = MAX_FORMANT_FRACTION * sample_rate
    n_max = int(ceiling // F0_HZ)
    return F0_HZ * np.arange(1, n_max + 1)


def control_params(values: np.ndarray, sample_rate: int):
    """Map raw frame values (.., 13) to (A, g, F1, F2, F3), vectorized."""
    lo, hi = MIN_FORMANT_HZ, MAX_FORMANT_FRACTION * sample_rate
    amp = np.clip(values[..., _L], 0.0, None) / 3.0
    aperture = np.clip(values[..., _UL_Y] - values[..., _LL_Y] + 1.0, 0.0, 1.0)
    f1 = np.clip(500.0 - 200.0 * values[..., _TD_Y], lo, hi)
    f2 = np.clip(1500.0 - 400.0 * values[..., _TD_X], lo, hi)
    f3 = np.clip(2500.0 - 150.0 * values[..., _TT_Y], lo, hi)
    return amp, aperture, f1, f2, f3


def _resonance_gain(freqs: np.ndarray, center: np.ndarray, bandwidth: float) -> np.ndarray:
    """Two-pole resonance magnitude, unit gain at the center frequency."""
    num = bandwidth * center
    det = (center**2 - freqs**2) ** 2 + (bandwidth * freqs) ** 2
    return num / np.sqrt(det)


def render_span(
    prev_frame: np.ndarray,
    frame: np.ndarray,
    span_index: int,
    span_samples: int,
    sample_rate: int,
) -> np.ndarray:
    """Render the samples for one step span, ramping prev_frame -> frame."""
    ramp = np.arange(1, span_samples + 1) / span_samples
    values = prev_frame[None, :] + (frame - prev_frame)[None, :] * ramp[:, None]
    amp, aperture, f1, f2, f3 = control_params(values, sample_rate)

    freqs = harmonic_frequencies(sample_rate)[None, :]
    gains = (
        _resonance_gain(freqs, f1[:, None], FORMANT_BANDWIDTHS_HZ[0])
        * _resonance_gain(freqs, f2[:, None], FORMANT_BANDWIDTHS_HZ[1])
        * _resonance_gain(freqs, f3[:, None], FORMANT_BANDWIDTHS_HZ[2])
    )

    sample_index = span_index * span_samples + np.arange(span_samples)
    phase = (2.0 * np.pi / sample_rate) * sample_index[:, None] * freqs
    shaped = np.sum(gains * np.cos(phase), axis=1) / np.sum(gains, axis=1)
    return np.clip(amp * aperture * shaped, -1.0, 1.0)


def synthesize_frames(
    frames: np.ndarray,
    step_duration: float,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
) -> np.ndarray:
    """Render a whole (n, 13) frame array to mono samples in [-1, 1].

    Output length is exactly n * round(step_duration * sample_rate).
    """
    frames = np.asarray(frames, dtype=float)
    if frames.ndim != 2 or frames.shape[1] != FRAME_DIM:
        raise ShapeError(f"expected (n, {FRAME_DIM}) frames, got {frames.shape}")
    if frames.shape[0] == 0:
        raise EmptyInputError("cannot synthesize an empty trajectory")

    span = samples_per_frame(step_duration, sample_rate)
    prev = np.zeros(FRAME_DIM)
    out = np.empty(frames.shape[0] * span)
    for k, frame in enumerate(frames):
        out[k * span : (k + 1) * span] = render_span(prev, frame, k, span, sample_rate)
        prev = frame
    return out
