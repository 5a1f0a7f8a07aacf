import numpy as np
import pytest
from hypothesis import given, strategies as st

from artic.env import ArticulatoryEnv, EpisodeConfig, RewardSignal, clamp_action, integrate
from artic.errors import ActionError, BackendError, ConfigError, EpisodeFinished
from artic.frames import (
    FRAME_DIM,
    LOUDNESS_INDEX,
    OBS_DIM,
    STACK_FRAMES,
    Articulator,
    Trajectory,
    frame_loudness,
    frame_xy,
    make_frame,
)

from conftest import StubBackend


class TestFrameLayout:
    def test_articulator_indices_are_stable(self):
        assert [a.name for a in Articulator] == ["TD", "TB", "TT", "LI", "UL", "LL"]
        assert [int(a) for a in Articulator] == [0, 1, 2, 3, 4, 5]

    def test_frame_flattening_order(self):
        frame = make_frame({Articulator.TD: (1.0, 2.0), Articulator.LL: (-1.0, -2.0)}, loudness=0.5)
        assert frame[0] == 1.0 and frame[1] == 2.0
        assert frame[10] == -1.0 and frame[11] == -2.0
        assert frame[LOUDNESS_INDEX] == 0.5
        assert frame.shape == (FRAME_DIM,)
        assert frame_xy(frame, Articulator.TD) == (1.0, 2.0)
        assert frame_loudness(frame) == 0.5

    def test_trajectory_append_only(self):
        trajectory = Trajectory(3)
        trajectory.append(np.ones(FRAME_DIM))
        assert len(trajectory) == 1
        with pytest.raises(Exception):
            trajectory.frames[0, 0] = 5.0  # read-only view


class TestClampAction:
    def test_upper_bound(self):
        raw = np.zeros(FRAME_DIM)
        raw[0] = 0.7
        assert clamp_action(raw)[0] == 0.5

    def test_lower_bound(self):
        raw = np.zeros(FRAME_DIM)
        raw[3] = -0.62
        assert clamp_action(raw)[3] == -0.5

    def test_interior_point_fixed(self):
        assert np.all(clamp_action(np.zeros(FRAME_DIM)) == 0.0)

    def test_order_preserved(self):
        raw = np.linspace(-1.0, 1.0, FRAME_DIM)
        clamped = clamp_action(raw)
        assert np.all(np.diff(clamped) >= 0)

    def test_non_finite_rejected(self):
        raw = np.zeros(FRAME_DIM)
        raw[5] = np.nan
        with pytest.raises(ActionError):
            clamp_action(raw)
        raw[5] = np.inf
        with pytest.raises(ActionError):
            clamp_action(raw)

    def test_wrong_shape_rejected(self):
        with pytest.raises(ActionError):
            clamp_action(np.zeros(12))


class TestIntegrate:
    def test_zero_base(self):
        frame = np.zeros(FRAME_DIM)
        action = np.zeros(FRAME_DIM)
        action[0] = 0.3
        assert integrate(frame, action)[0] == pytest.approx(0.3)

    def test_clamp_at_upper_bound(self):
        frame = np.full(FRAME_DIM, 2.9)
        action = np.full(FRAME_DIM, 0.3)
        assert np.all(integrate(frame, action) == 3.0)

    def test_symmetric_clamp(self):
        frame = np.full(FRAME_DIM, -2.8)
        action = np.full(FRAME_DIM, -0.5)
        assert np.all(integrate(frame, action) == -3.0)


class TestReset:
    def test_zero_reset(self, episode_config):
        env = ArticulatoryEnv()
        obs = env.reset(episode_config)
        assert obs.shape == (STACK_FRAMES, FRAME_DIM)
        assert obs.size == OBS_DIM
        assert np.all(obs == 0.0)
        assert env.step_count == 0
        assert len(env.trajectory) == 0

    def test_short_episode_arithmetic(self, unit_target):
        config = EpisodeConfig(target=unit_target, horizon=1, step_duration=0.02)
        assert config.episode_seconds == pytest.approx(0.02)

    def test_default_episode_is_one_second(self, unit_target):
        config = EpisodeConfig(target=unit_target)
        assert config.horizon == 50 and config.step_duration == 0.02
        assert config.episode_seconds == pytest.approx(1.0)

    def test_invalid_horizon(self, unit_target):
        with pytest.raises(ConfigError):
            ArticulatoryEnv().reset(EpisodeConfig(target=unit_target, horizon=0))

    def test_non_finite_target(self):
        from artic.backend import SyllableEmbedding

        bad = SyllableEmbedding(np.array([1.0, np.nan]))
        with pytest.raises(ConfigError):
            ArticulatoryEnv().reset(EpisodeConfig(target=bad))


class TestStep:
    def test_zero_dynamics(self, episode_config, stub_backend):
        env = ArticulatoryEnv()
        env.reset(episode_config)
        obs, signal, done = env.step(np.zeros(FRAME_DIM), stub_backend)
        assert np.all(obs == 0.0)
        assert not done

    def test_done_at_horizon(self, episode_config, stub_backend):
        env = ArticulatoryEnv()
        env.reset(episode_config)
        for t in range(episode_config.horizon):
            _, _, done = env.step(np.zeros(FRAME_DIM), stub_backend)
            assert done == (t == episode_config.horizon - 1)
        with pytest.raises(EpisodeFinished):
            env.step(np.zeros(FRAME_DIM), stub_backend)

    def test_no_detection_scores_minus_one(self, episode_config, backend):
        env = ArticulatoryEnv()
        env.reset(episode_config)
        _, signal, _ = env.step(np.zeros(FRAME_DIM), backend)
        assert signal.value == -1.0
        assert signal.detected is False

    def test_trajectory_grows_per_step(self, episode_config, stub_backend):
        env = ArticulatoryEnv()
        env.reset(episode_config)
        rng = np.random.default_rng(3)
        for n in range(1, 11):
            env.step(rng.uniform(-1, 1, FRAME_DIM), stub_backend)
            assert len(env.trajectory) == n

    def test_backend_failure_carries_step_index(self, episode_config):
        class FailingBackend(StubBackend):
            def score(self, trajectory, target, step_duration=0.02):
                raise RuntimeError("decoder exploded")

        env = ArticulatoryEnv()
        env.reset(episode_config)
        env_step = lambda: env.step(np.zeros(FRAME_DIM), FailingBackend())
        with pytest.raises(BackendError, match="step 1"):
            env_step()

    def test_terminal_only_scores_once(self, unit_target):
        config = EpisodeConfig(target=unit_target, horizon=5, reward_mode="terminal_only")
        backend = StubBackend()
        env = ArticulatoryEnv()
        env.reset(config)
        signals = []
        for _ in range(5):
            _, signal, _ = env.step(np.zeros(FRAME_DIM), backend)
            signals.append(signal)
        assert backend.calls == 1
        assert all(not s.scored for s in signals[:-1])
        assert signals[-1].scored


class TestRewardSignalContract:
    def test_miss_is_exactly_minus_one(self):
        signal = RewardSignal.miss()
        assert signal.value == -1.0 and not signal.detected and signal.scored

    def test_detected_value_equals_similarity(self):
        signal = RewardSignal(value=0.73, detected=True, similarity=0.73)
        assert signal.value == signal.similarity


@given(seed=st.integers(0, 2**32 - 1), horizon=st.integers(1, 30))
def test_bounds_hold_for_any_action_sequence(seed, horizon, ):
    import conftest

    rng = np.random.default_rng(seed)
    backend = conftest.StubBackend()
    from artic.backend import SyllableEmbedding

    target = SyllableEmbedding(np.eye(40)[0])
    env = ArticulatoryEnv()
    env.reset(EpisodeConfig(target=target, horizon=horizon))
    done = False
    while not done:
        action = rng.uniform(-2.0, 2.0, FRAME_DIM)
        obs, _, done = env.step(action, backend)
        assert np.all(obs >= -3.0) and np.all(obs <= 3.0)
    assert env.step_count == horizon


@given(seed=st.integers(0, 2**32 - 1))
def test_stack_shift_semantics(seed):
    import conftest

    rng = np.random.default_rng(seed)
    backend = conftest.StubBackend()
    from artic.backend import SyllableEmbedding

    target = SyllableEmbedding(np.eye(40)[0])
    horizon = 20
    env = ArticulatoryEnv()
    env.reset(EpisodeConfig(target=target, horizon=horizon))
    frames_after_step = []
    for t in range(1, horizon + 1):
        obs, _, _ = env.step(rng.uniform(-1.0, 1.0, FRAME_DIM), backend)
        frames_after_step.append(env.current_frame)
        for k in range(STACK_FRAMES):
            if k <= min(t, STACK_FRAMES - 1) and t - k >= 1:
                expected = frames_after_step[t - k - 1]
                assert np.array_equal(obs[STACK_FRAMES - 1 - k], expected)
            else:
                assert np.all(obs[STACK_FRAMES - 1 - k] == 0.0)


def test_determinism_bitwise(episode_config, backend):
    def run():
        env = ArticulatoryEnv()
        env.reset(episode_config)
        rng = np.random.default_rng(11)
        observations, rewards = [], []
        done = False
        while not done:
            obs, signal, done = env.step(rng.uniform(-0.5, 0.5, FRAME_DIM), backend)
            observations.append(obs)
            rewards.append(signal.value)
        return np.array(observations), np.array(rewards)

    obs_a, rew_a = run()
    backend.reset_cache()
    obs_b, rew_b = run()
    assert np.array_equal(obs_a, obs_b)
    assert np.array_equal(rew_a, rew_b)
