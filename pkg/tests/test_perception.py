import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artic.errors import SegmentTooShort, ShapeError, UndefinedSimilarityError
from artic.perception import (
    MEL_BANDS,
    cosine,
    embed_range,
    hop_length,
    logmel_frames,
    mel_filterbank,
    rms_frames,
    segment_ranges,
    window_length,
)

SR = 16000


def tone(freq, duration_s, amplitude=0.5, sr=SR):
    t = np.arange(int(duration_s * sr)) / sr
    return amplitude * np.sin(2 * np.pi * freq * t)


class TestDetection:
    def test_silence_yields_nothing(self):
        assert segment_ranges(np.zeros(SR), SR) == []

    def test_single_burst_boundaries_within_one_hop(self):
        hop = hop_length(SR)
        burst = tone(440.0, 0.4)
        samples = np.concatenate([np.zeros(4800), burst, np.zeros(4800)])
        ranges = segment_ranges(samples, SR)
        assert len(ranges) == 1
        start, end = ranges[0]
        assert abs(start - 4800) <= hop
        assert abs(end - (4800 + burst.size)) <= hop

    def test_short_blip_is_ignored(self):
        blip = tone(440.0, 0.03)  # 30 ms, below the 60 ms minimum
        samples = np.concatenate([np.zeros(4800), blip, np.zeros(4800)])
        assert segment_ranges(samples, SR) == []

    def test_two_bursts_are_ordered_and_disjoint(self):
        samples = np.concatenate(
            [np.zeros(3200), tone(300, 0.2), np.zeros(3200), tone(2000, 0.2), np.zeros(3200)]
        )
        ranges = segment_ranges(samples, SR)
        assert len(ranges) == 2
        (s0, e0), (s1, e1) = ranges
        assert s0 < e0 <= s1 < e1

    def test_thresholds_are_overridable(self):
        quiet = tone(440.0, 0.4, amplitude=0.02)  # RMS ~0.014, under default
        assert segment_ranges(quiet, SR) == []
        assert len(segment_ranges(quiet, SR, rms_threshold=0.01)) == 1

    def test_rms_partial_tail(self):
        samples = np.ones(hop_length(SR) + 10)
        values = rms_frames(samples, SR)
        assert values.size == 2
        assert values[1] == pytest.approx(1.0)


class TestEmbedding:
    def test_unit_norm(self):
        rng = np.random.default_rng(0)
        samples = rng.normal(0, 0.2, SR)
        emb = embed_range(samples, SR, 0, SR)
        assert emb.shape == (MEL_BANDS,)
        assert np.linalg.norm(emb) == pytest.approx(1.0, abs=1e-9)

    def test_amplitude_scaling_cancels(self):
        rng = np.random.default_rng(1)
        samples = rng.normal(0, 0.3, SR // 2)
        emb_full = embed_range(samples, SR, 0, samples.size)
        emb_half = embed_range(0.5 * samples, SR, 0, samples.size)
        assert 1.0 - float(emb_full @ emb_half) < 1e-6

    def test_disjoint_tones_are_dissimilar(self):
        emb_low = embed_range(tone(300.0, 0.5), SR, 0, SR // 2)
        emb_high = embed_range(tone(3000.0, 0.5), SR, 0, SR // 2)
        assert cosine(emb_low, emb_high) < 0.9

    def test_too_short_range_rejected(self):
        samples = np.ones(SR)
        with pytest.raises(SegmentTooShort):
            embed_range(samples, SR, 0, window_length(SR) - 1)

    def test_invalid_range_rejected(self):
        with pytest.raises(ShapeError):
            embed_range(np.ones(100), SR, 50, 200)

    def test_deterministic(self):
        rng = np.random.default_rng(2)
        samples = rng.normal(0, 0.2, SR)
        a = embed_range(samples, SR, 0, SR)
        b = embed_range(samples, SR, 0, SR)
        assert np.array_equal(a, b)

    def test_filterbank_shape_and_coverage(self):
        bank = mel_filterbank(SR, 512)
        assert bank.shape == (MEL_BANDS, 257)
        assert np.all(bank >= 0.0)
        assert np.all(bank.sum(axis=1) > 0.0)  # every band catches some bins

    def test_logmel_rows_count(self):
        win, hop = window_length(SR), hop_length(SR)
        samples = np.zeros(win + 3 * hop + 5)
        assert logmel_frames(samples, SR).shape == (4, MEL_BANDS)
        assert logmel_frames(np.zeros(win - 1), SR).shape == (0, MEL_BANDS)


class TestCosine:
    def test_self_similarity(self):
        v = np.array([0.3, -0.4, 1.2])
        assert cosine(v, v) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 2.0])) == pytest.approx(0.0)

    def test_opposite(self):
        v = np.array([0.5, -1.0, 2.0])
        assert cosine(v, -v) == pytest.approx(-1.0)

    def test_zero_vector_rejected(self):
        with pytest.raises(UndefinedSimilarityError):
            cosine(np.zeros(3), np.ones(3))

    def test_dim_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            cosine(np.ones(3), np.ones(4))

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=50)
    def test_always_in_unit_interval(self, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.normal(size=8), rng.normal(size=8)
        assert -1.0 <= cosine(a, b) <= 1.0
