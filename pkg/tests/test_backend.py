import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artic.backend import ReferenceBackend, SyllableEmbedding
from artic.errors import CompatibilityError, EmptyInputError, TargetError
from artic.frames import FRAME_DIM, Trajectory
from artic.perception import cosine
from artic.targets import EXPERT_TARGET_NAMES, expert_target, expert_trajectory
from artic.wavio import resample_linear, write_wav


def loud_trajectory(n=30, loudness=2.0, posture=None):
    frames = np.zeros((n, FRAME_DIM))
    ramp = np.minimum(np.arange(1, n + 1) * 0.5, loudness)
    frames[:, 12] = ramp
    if posture:
        for index, value in posture.items():
            steps = np.minimum(np.arange(1, n + 1) * 0.5, abs(value)) * np.sign(value)
            frames[:, index] = steps
    return Trajectory.from_frames(frames)


def silent_trajectory(n=20):
    return Trajectory.from_frames(np.zeros((n, FRAME_DIM)))


class TestScore:
    def test_silence_scores_exactly_minus_one(self, backend, unit_target):
        signal = backend.score(silent_trajectory(), unit_target)
        assert signal.value == -1.0
        assert signal.detected is False

    def test_self_target_scores_one(self, backend):
        trajectory = loud_trajectory()
        target = backend.make_target(trajectory)
        backend.reset_cache()
        signal = backend.score(trajectory, target)
        assert signal.detected
        assert abs(signal.value - 1.0) <= 1e-9

    def test_empty_trajectory_rejected(self, backend, unit_target):
        with pytest.raises(EmptyInputError):
            backend.score(Trajectory(5), unit_target)

    def test_dim_mismatch_rejected(self, backend):
        with pytest.raises(CompatibilityError):
            backend.score(loud_trajectory(), SyllableEmbedding(np.ones(8)))

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=40)
    def test_rewards_always_in_unit_interval(self, seed):
        backend = ReferenceBackend()
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 25))
        frames = np.cumsum(rng.uniform(-0.5, 0.5, (n, FRAME_DIM)), axis=0).clip(-3, 3)
        trajectory = Trajectory.from_frames(frames)
        target = SyllableEmbedding(np.eye(40)[int(rng.integers(0, 40))])
        signal = backend.score(trajectory, target)
        assert -1.0 <= signal.value <= 1.0
        assert signal.value == -1.0 or signal.detected

    def test_incremental_cache_matches_fresh_backend(self, unit_target):
        rng = np.random.default_rng(5)
        warm = ReferenceBackend()
        frames = np.cumsum(rng.uniform(-0.5, 0.5, (20, FRAME_DIM)), axis=0).clip(-3, 3)
        frames[:, 12] = np.abs(frames[:, 12]) + 1.0  # keep it audible
        trajectory = Trajectory(20)
        warm_values = []
        for row in frames:
            trajectory.append(row)
            warm_values.append(warm.score(trajectory, unit_target).value)
        for n in (1, 7, 20):
            cold = ReferenceBackend()
            prefix = Trajectory.from_frames(frames[:n])
            assert cold.score(prefix, unit_target).value == warm_values[n - 1]

    def test_cache_invalidation_on_divergent_prefix(self, unit_target):
        backend = ReferenceBackend()
        a = loud_trajectory(10)
        b_frames = np.asarray(a.frames).copy()
        b_frames[0, 0] = 1.5
        b = Trajectory.from_frames(b_frames)
        value_a = backend.score(a, unit_target).value
        value_b = backend.score(b, unit_target).value
        fresh = ReferenceBackend()
        assert fresh.score(b, unit_target).value == value_b
        fresh.reset_cache()
        assert fresh.score(a, unit_target).value == value_a

    def test_score_embedding_matches_public_pipeline(self, backend):
        trajectory = loud_trajectory(25, posture={1: -1.0})
        waveform = backend.synthesize(trajectory, 0.02)
        segments = backend.detect_syllables(waveform)
        assert segments, "expected at least one detected syllable"
        last = segments[-1]
        target = SyllableEmbedding(last.embedding.values)
        backend.reset_cache()
        signal = backend.score(trajectory, target)
        assert signal.value == pytest.approx(1.0, abs=1e-12)


class TestDetectAndSegments:
    def test_segments_carry_embeddings(self, backend):
        waveform = backend.synthesize(loud_trajectory(), 0.02)
        segments = backend.detect_syllables(waveform)
        assert len(segments) >= 1
        for segment in segments:
            assert 0 <= segment.start_sample < segment.end_sample <= waveform.samples.size
            assert np.linalg.norm(segment.embedding.values) == pytest.approx(1.0, abs=1e-9)

    def test_silence_has_no_segments(self, backend):
        waveform = backend.synthesize(silent_trajectory(), 0.02)
        assert backend.detect_syllables(waveform) == []


class TestMakeTarget:
    def test_expert_fixture_is_unit_norm(self, backend):
        for name in EXPERT_TARGET_NAMES:
            embedding = expert_target(name, backend)
            assert embedding.dim == 40
            assert np.linalg.norm(embedding.values) == pytest.approx(1.0, abs=1e-9)

    def test_silent_source_rejected(self, backend):
        with pytest.raises(TargetError):
            backend.make_target(silent_trajectory())

    def test_fixture_targets_are_mutually_distinct(self, backend):
        embeddings = {name: expert_target(name, backend).values for name in EXPERT_TARGET_NAMES}
        for a, b in itertools.combinations(EXPERT_TARGET_NAMES, 2):
            assert cosine(embeddings[a], embeddings[b]) < 0.8

    def test_wav_at_other_rate_resampled(self, backend, tmp_path):
        trajectory = expert_trajectory("oo")
        waveform = backend.synthesize(trajectory, 0.02)
        direct = backend.make_target(trajectory)

        upsampled = resample_linear(waveform.samples, 16000, 22050)
        wav_path = tmp_path / "target_22050.wav"
        write_wav(wav_path, upsampled, 22050)
        via_wav = backend.make_target(wav_path)
        assert cosine(direct.values, via_wav.values) >= 0.99

    def test_expert_trajectory_respects_bounds(self):
        for name in EXPERT_TARGET_NAMES:
            frames = np.asarray(expert_trajectory(name).frames)
            assert np.all(np.abs(frames) <= 3.0)
            steps = np.diff(np.vstack([np.zeros(FRAME_DIM), frames]), axis=0)
            assert np.all(np.abs(steps) <= 0.5 + 1e-12)
